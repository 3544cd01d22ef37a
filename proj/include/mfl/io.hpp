#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfl/dynamics.hpp"
#include "mfl/measures.hpp"

namespace mfl {

// 17 significant digits: doubles round-trip exactly through this format.
std::string format_g17(double v);

// Measure file: header line "d N", then one line per atom "x_1 ... x_d m".
std::string atoms_to_text(const EmpiricalMeasure& mu);
EmpiricalMeasure atoms_from_text(const std::string& text);
void write_atoms(const std::filesystem::path& p, const EmpiricalMeasure& mu);
EmpiricalMeasure read_atoms(const std::filesystem::path& p);

// Trajectory file: one measure block per sample preceded by a "t <time>"
// separator; collision events appended as
//   collision t=<time> i=<a> j=<b> dist=<r>
std::string trajectory_to_text(const TrajectoryRecord& rec);
TrajectoryRecord trajectory_from_text(const std::string& text);
void write_trajectory(const std::filesystem::path& p, const TrajectoryRecord& rec);

// Comma-separated table with a fixed header; metadata lines start with '#'.
struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells);
    std::string to_csv() const;
};

std::string cell(double v);
std::string cell(std::size_t v);
std::string cell(int v);
std::string cell(bool v);

// Plot companion: whitespace-separated "x y yerr" rows.
std::string plotdata_to_text(const std::vector<std::array<double, 3>>& rows);

void write_text_file(const std::filesystem::path& p, const std::string& content);
std::string read_text_file(const std::filesystem::path& p);

// FNV-1a 64-bit; used for the output manifest.
std::uint64_t fnv1a64(std::string_view data);

// manifest.txt: "<filename> <fnv1a64 hex>" per line, sorted by name.
void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& filenames);

} // namespace mfl
