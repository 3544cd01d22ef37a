#include "mfl/io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mfl {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string atoms_to_text(const EmpiricalMeasure& mu) {
    std::ostringstream os;
    os << mu.dim << " " << mu.size() << "\n";
    for (std::size_t i = 0; i < mu.size(); ++i) {
        for (int k = 0; k < mu.dim; ++k) os << format_g17(mu.positions[i * mu.dim + k]) << " ";
        os << format_g17(mu.masses[i]) << "\n";
    }
    return os.str();
}

EmpiricalMeasure atoms_from_text(const std::string& text) {
    std::istringstream is(text);
    EmpiricalMeasure mu;
    std::size_t n = 0;
    if (!(is >> mu.dim >> n)) throw InvalidInputError("atoms: malformed header");
    if (mu.dim < 1 || mu.dim > 16) throw InvalidInputError("atoms: unsupported dimension");
    mu.positions.resize(n * mu.dim);
    mu.masses.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < mu.dim; ++k)
            if (!(is >> mu.positions[i * mu.dim + k])) throw InvalidInputError("atoms: truncated row");
        if (!(is >> mu.masses[i])) throw InvalidInputError("atoms: truncated row");
    }
    return mu;
}

void write_atoms(const std::filesystem::path& p, const EmpiricalMeasure& mu) {
    write_text_file(p, atoms_to_text(mu));
}

EmpiricalMeasure read_atoms(const std::filesystem::path& p) {
    return atoms_from_text(read_text_file(p));
}

std::string trajectory_to_text(const TrajectoryRecord& rec) {
    std::ostringstream os;
    for (std::size_t s = 0; s < rec.times.size(); ++s) {
        os << "t " << format_g17(rec.times[s]) << "\n";
        os << atoms_to_text(rec.states[s]);
    }
    for (const auto& ev : rec.events)
        os << "collision t=" << format_g17(ev.time) << " i=" << ev.i << " j=" << ev.j
           << " dist=" << format_g17(ev.dist) << "\n";
    return os.str();
}

TrajectoryRecord trajectory_from_text(const std::string& text) {
    TrajectoryRecord rec;
    std::istringstream is(text);
    std::string line;
    std::string pending;
    while (std::getline(is, line)) {
        if (line.rfind("t ", 0) == 0) {
            rec.times.push_back(std::stod(line.substr(2)));
            // read the measure block that follows
            std::string header;
            if (!std::getline(is, header)) throw InvalidInputError("trajectory: truncated block");
            std::istringstream hs(header);
            int d = 0;
            std::size_t n = 0;
            if (!(hs >> d >> n)) throw InvalidInputError("trajectory: malformed block header");
            std::ostringstream block;
            block << header << "\n";
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::getline(is, line)) throw InvalidInputError("trajectory: truncated block");
                block << line << "\n";
            }
            rec.states.push_back(atoms_from_text(block.str()));
        } else if (line.rfind("collision ", 0) == 0) {
            CollisionEvent ev;
            if (std::sscanf(line.c_str(), "collision t=%lf i=%zu j=%zu dist=%lf", &ev.time, &ev.i,
                            &ev.j, &ev.dist) != 4)
                throw InvalidInputError("trajectory: malformed collision line");
            rec.events.push_back(ev);
        } else if (!line.empty()) {
            throw InvalidInputError("trajectory: unexpected line: " + line);
        }
    }
    return rec;
}

void write_trajectory(const std::filesystem::path& p, const TrajectoryRecord& rec) {
    write_text_file(p, trajectory_to_text(rec));
}

void Table::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns.size()) throw InvalidInputError("table: row width mismatch");
    rows.push_back(std::move(cells));
}

std::string Table::to_csv() const {
    std::ostringstream os;
    for (const auto& c : comments) os << "# " << c << "\n";
    for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << row[k];
        os << "\n";
    }
    return os.str();
}

std::string cell(double v) { return format_g17(v); }
std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }

std::string plotdata_to_text(const std::vector<std::array<double, 3>>& rows) {
    std::ostringstream os;
    for (const auto& r : rows)
        os << format_g17(r[0]) << " " << format_g17(r[1]) << " " << format_g17(r[2]) << "\n";
    return os.str();
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot open for writing: " + p.string());
    f << content;
    if (!f) throw Error("write failed: " + p.string());
}

std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error("cannot open: " + p.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& filenames) {
    auto sorted = filenames;
    std::sort(sorted.begin(), sorted.end());
    std::ostringstream os;
    for (const auto& name : sorted) {
        const auto content = read_text_file(dir / name);
        char hex[24];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(content)));
        os << name << " " << hex << "\n";
    }
    write_text_file(dir / "manifest.txt", os.str());
}

} // namespace mfl
