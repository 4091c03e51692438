#pragma once

#include <stdexcept>
#include <string>

#include "roaid/dynamics.hpp"
#include "roaid/estimator.hpp"
#include "roaid/kernels.hpp"
#include "roaid/roa_grid.hpp"

namespace roaid {

/// Raised when text input does not match the expected schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;

std::string kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const std::string& text);

std::string grid_to_json(const GridSet& grid);
GridSet grid_from_json(const std::string& text);
/// One point per row, header x1..xn.
std::string grid_to_csv(const GridSet& grid);
GridSet grid_from_csv(const std::string& text);

std::string dataset_to_json(const DataSet& data);
DataSet dataset_from_json(const std::string& text);
/// Header x1..xn,y1..yn; provenance is not stored.
std::string dataset_to_csv(const DataSet& data);
DataSet dataset_from_csv(const std::string& text);

/// Header t,x1..xn.
std::string trajectory_to_csv(const Trajectory& traj);

std::string model_to_json(const VectorFieldModel& model);
VectorFieldModel model_from_json(const std::string& text);

std::string report_to_json(const CoverReport& report);
std::string report_to_json(const CertificateReport& report);
std::string report_to_json(const EvalReport& report);
std::string report_to_json(const KKTReport& report);
std::string report_to_json(const CvResult& result);

/// Lattice values as CSV: x1..xn, f1..fn (truth), fhat1..fhatn, r1..rn (residual).
std::string lattice_to_csv(const LatticeEvaluation& lattice);

/// Lattice values of a single field as CSV: x1..xn, f1..fn.
std::string field_to_csv(const VectorField& field, const EvalBox& box, int res);

/// Whole-file helpers. Throw std::runtime_error on I/O failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace roaid
