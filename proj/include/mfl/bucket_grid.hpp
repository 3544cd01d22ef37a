#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

namespace mfl {

// Uniform hashing grid over points in R^d (d <= 3) for fixed-radius neighbor
// queries.  Positions are row-major n x dim.  Queries return a superset of
// the points within the radius; callers filter by exact distance.
//
// usable() is false when the extent/cell ratio would overflow the coordinate
// packing; callers must then fall back to a plain scan.
class BucketGrid {
public:
    BucketGrid(std::span<const double> positions, int dim, std::size_t n, double cell)
        : pos_(positions), dim_(dim), cell_(cell) {
        if (dim_ > 3 || !(cell > 0.0) || !std::isfinite(cell)) return;
        double ext = 0.0;
        for (int k = 0; k < dim_; ++k) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = 0; i < n; ++i) {
                lo = std::min(lo, pos_[i * dim_ + k]);
                hi = std::max(hi, pos_[i * dim_ + k]);
            }
            origin_[k] = lo;
            ext = std::max(ext, hi - lo);
        }
        if (ext / cell_ > 1e6) return;
        max_coord_ = static_cast<int>(ext / cell_) + 1;
        usable_ = true;
        cells_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            int c[3] = {0, 0, 0};
            coords_of(&pos_[i * dim_], c);
            cells_[pack(c)].push_back(static_cast<int>(i));
        }
    }

    bool usable() const { return usable_; }

    template <typename F>
    void for_candidates(const double* x, double radius, F&& fn) const {
        int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
        for (int k = 0; k < dim_; ++k) {
            lo[k] = clamp_coord((x[k] - radius - origin_[k]) / cell_);
            hi[k] = clamp_coord((x[k] + radius - origin_[k]) / cell_);
        }
        int c[3] = {lo[0], lo[1], lo[2]};
        while (true) {
            auto it = cells_.find(pack(c));
            if (it != cells_.end())
                for (int idx : it->second) fn(idx);
            int k = 0;
            while (k < dim_ && ++c[k] > hi[k]) {
                c[k] = lo[k];
                ++k;
            }
            if (k == dim_) break;
        }
    }

    double cell_size() const { return cell_; }

private:
    int clamp_coord(double v) const {
        if (v < 0.0) return 0;
        if (v > static_cast<double>(max_coord_)) return max_coord_;
        return static_cast<int>(v);
    }
    void coords_of(const double* p, int* c) const {
        for (int k = 0; k < dim_; ++k) c[k] = clamp_coord((p[k] - origin_[k]) / cell_);
    }
    static std::uint64_t pack(const int* c) {
        return static_cast<std::uint64_t>(c[0]) | (static_cast<std::uint64_t>(c[1]) << 21) |
               (static_cast<std::uint64_t>(c[2]) << 42);
    }
    std::span<const double> pos_;
    int dim_;
    double cell_;
    double origin_[3] = {0, 0, 0};
    int max_coord_ = 0;
    bool usable_ = false;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

} // namespace mfl
