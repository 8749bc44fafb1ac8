#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ucnn/milp_model.hpp"

namespace ucnn::milp {

// Fixed-format MPS. Columns and rows are written under positional names
// (`C0000000`, `R0000000`, objective `COST`) so every name fits the 8-column
// field regardless of how the model labels them. Every column gets explicit
// bounds; integral columns sit between INTORG/INTEND markers.

std::string mps_column_name(int col);
std::string mps_row_name(int row);

void write_mps(const MilpModel& model, std::ostream& out);

/// Throws ucnn::Error when the destination cannot be written.
void export_standard(const MilpModel& model, const std::filesystem::path& destination);

/// Reads fixed- or free-format MPS (whitespace separated, no RANGES). An
/// integral column whose bounds lie within [0, 1] is read back as binary.
MilpModel read_mps(std::istream& in);
MilpModel import_standard(const std::filesystem::path& source);

/// Solution files: one `name value` pair per line, `#` comments allowed.
/// Names may be the model's own variable names or positional MPS names.
/// Missing continuous columns read as 0; a missing integral column, an
/// unknown name or a malformed line throws SchemaError.
std::vector<double> import_solution(std::istream& in, const MilpModel& model);
std::vector<double> import_solution(const std::filesystem::path& source, const MilpModel& model);

void write_solution(std::ostream& out, const MilpModel& model, std::span<const double> x);

}  // namespace ucnn::milp
