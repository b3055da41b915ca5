#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "gtml/core.hpp"

namespace gtml::io {

/// Trajectory text format: header `t,b_label,h_label,query,c1,c2`, then one
/// record per line with t counting from 1.
inline constexpr const char* kTrajectoryHeader = "t,b_label,h_label,query,c1,c2";

void write_trajectory(std::ostream& out, const Trajectory& traj, const Environment& env);
/// Throws InputError with the offending line number on malformed input.
Trajectory read_trajectory(std::istream& in, const Environment& env);

/// Model text format:
///   gtml-model 1
///   behaviors <n> <label>...
///   signals <m> <label>...
///   signal <label>        (then n rows of n values, 17 significant digits)
void write_model(std::ostream& out, const BehaviorModel& model, const BehaviorSpace& behaviors,
                 const SignalSpace& signals);
/// Labels must match the given spaces exactly (same order).
BehaviorModel read_model(std::istream& in, const BehaviorSpace& behaviors,
                         const SignalSpace& signals);

/// Shortest round-trip text for a double.
std::string format_double(double v);

/// CSV with a `# created <timestamp>` first line, then a header row. The
/// timestamp line is the only part that varies between identical runs.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns);

    CsvWriter& operator<<(const std::string& cell);
    CsvWriter& operator<<(const char* cell) { return *this << std::string(cell); }
    CsvWriter& operator<<(double v) { return *this << format_double(v); }
    CsvWriter& operator<<(std::size_t v) { return *this << std::to_string(v); }
    CsvWriter& operator<<(int v) { return *this << std::to_string(v); }

    /// Ends the current row; throws InputError when the cell count is wrong.
    void end_row();
    void close();

private:
    std::ofstream out_;
    std::size_t columns_;
    std::vector<std::string> row_;
};

/// Parsed CSV without comment lines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

std::ofstream open_output(const std::filesystem::path& path);

}  // namespace gtml::io
