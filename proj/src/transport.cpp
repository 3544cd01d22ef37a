#include "mfl/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfl/bucket_grid.hpp"
#include "mfl/errors.hpp"

namespace mfl {

namespace {

constexpr std::int64_t kMassScale = std::int64_t(1) << 40;

double pair_dist(const EmpiricalMeasure& a, std::size_t i, const EmpiricalMeasure& b, std::size_t j) {
    double r2 = 0.0;
    for (int k = 0; k < a.dim; ++k) {
        const double d = a.positions[i * a.dim + k] - b.positions[j * b.dim + k];
        r2 += d * d;
    }
    return std::sqrt(r2);
}

// Masses scaled to integers summing exactly to `scale` (largest-remainder
// rounding, every atom at least one unit).
std::vector<std::int64_t> to_units(const std::vector<double>& masses, std::int64_t scale) {
    const std::size_t n = masses.size();
    std::vector<std::int64_t> u(n);
    std::vector<std::pair<double, std::size_t>> rem(n);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double scaled = masses[i] * static_cast<double>(scale);
        u[i] = static_cast<std::int64_t>(std::floor(scaled));
        rem[i] = {scaled - std::floor(scaled), i};
        total += u[i];
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::int64_t deficit = scale - total;
    std::size_t cursor = 0;
    while (deficit > 0) {
        u[rem[cursor % n].second] += 1;
        ++cursor;
        --deficit;
    }
    cursor = n;
    while (deficit < 0) {
        const std::size_t i = rem[--cursor % n].second;
        if (u[i] > 1) {
            u[i] -= 1;
            ++deficit;
        }
        if (cursor == 0) cursor = n;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (u[i] == 0) {
            auto mx = std::max_element(u.begin(), u.end());
            *mx -= 1;
            u[i] = 1;
        }
    }
    return u;
}

// Shared integer scaling for a pair of measures.  When both measures carry
// exactly equal masses the scaling is exact (denominator divisible by both
// atom counts); otherwise the grid is 2^40 with largest-remainder rounding,
// a documented <= 1e-12 effect per atom.
struct UnitPair {
    std::vector<std::int64_t> supply, demand;
    std::int64_t total = 0;
};

UnitPair units_for_pair(const std::vector<double>& mu, const std::vector<double>& nu) {
    UnitPair up;
    auto all_equal = [](const std::vector<double>& m) {
        for (double v : m)
            if (v != m.front()) return false;
        return true;
    };
    const std::int64_t n = static_cast<std::int64_t>(mu.size());
    const std::int64_t m = static_cast<std::int64_t>(nu.size());
    if (all_equal(mu) && all_equal(nu)) {
        const std::int64_t base = std::max<std::int64_t>(1, kMassScale / (n * m));
        up.total = base * n * m;
        up.supply.assign(mu.size(), base * m);
        up.demand.assign(nu.size(), base * n);
        return up;
    }
    up.total = kMassScale;
    up.supply = to_units(mu, kMassScale);
    up.demand = to_units(nu, kMassScale);
    return up;
}

void check_compatible(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      const TransportLimits& limits) {
    mu.check_normalized();
    nu.check_normalized();
    if (mu.dim != nu.dim) throw InvalidInputError("transport: dimension mismatch");
    if (mu.size() * nu.size() > limits.max_pair_product)
        throw CapacityError("transport: pair product exceeds the configured limit");
}

// ---------------------------------------------------------------------------
// Network simplex for the transportation problem.
//
// Nodes: sources 0..ns-1, sinks ns..ns+nt-1, artificial root ns+nt.  Real
// arcs are the complete bipartite set; artificial big-M arcs connect every
// node to the root and form the initial (strongly feasible) basis.

class NetworkSimplex {
public:
    NetworkSimplex(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p, UnitPair units)
        : ns_(mu.size()), nt_(nu.size()), n_nodes_(ns_ + nt_ + 1), root_(ns_ + nt_),
          supply_(std::move(units.supply)), demand_(std::move(units.demand)), total_(units.total) {
        cost_.resize(ns_ * nt_);
        double cmax = 0.0;
        for (std::size_t i = 0; i < ns_; ++i)
            for (std::size_t j = 0; j < nt_; ++j) {
                const double r = pair_dist(mu, i, nu, j);
                const double c = (p == 2) ? r * r : r;
                cost_[i * nt_ + j] = c;
                cmax = std::max(cmax, c);
            }
        big_m_ = 8.0 * (cmax + 1.0);
        tol_ = 1e-13 * (cmax + 1.0);
    }

    std::int64_t total_units() const { return total_; }

    // Runs the simplex; returns plan entries (unit flows) and pivot count.
    void solve() {
        init_basis();
        const std::size_t n_arcs = ns_ * nt_;
        const std::size_t block = std::clamp<std::size_t>(n_arcs / 64, 64, 4096);
        std::size_t scan = 0;
        const std::uint64_t pivot_cap = 400ull * (ns_ + nt_) + 200000ull;
        while (true) {
            // block search for the most negative reduced cost
            std::size_t best = n_arcs;
            double best_rc = -tol_;
            std::size_t scanned = 0;
            while (scanned < n_arcs) {
                const std::size_t upto = std::min(scan + block, n_arcs);
                for (std::size_t a = scan; a < upto; ++a) {
                    const double rc = cost_[a] + pot_[a / nt_] - pot_[ns_ + a % nt_];
                    if (rc < best_rc) {
                        best_rc = rc;
                        best = a;
                    }
                }
                scanned += upto - scan;
                scan = (upto == n_arcs) ? 0 : upto;
                if (best != n_arcs) break;
            }
            if (best == n_arcs) break; // optimal
            pivot(best);
            if (++pivots_ > pivot_cap)
                throw NumericError("network simplex exceeded its pivot budget");
        }
    }

    std::uint64_t pivots() const { return pivots_; }

    template <typename F>
    void for_basic_flows(F&& fn) const {
        for (std::size_t v = 0; v < ns_ + nt_; ++v) {
            if (flow_[v] <= 0) continue;
            const std::int64_t a = pred_arc_[v];
            if (a < 0 || static_cast<std::size_t>(a) >= ns_ * nt_) continue; // artificial
            fn(static_cast<std::size_t>(a) / nt_, static_cast<std::size_t>(a) % nt_, flow_[v]);
        }
    }

    double arc_cost(std::size_t i, std::size_t j) const { return cost_[i * nt_ + j]; }

private:
    void init_basis() {
        parent_.assign(n_nodes_, static_cast<std::int32_t>(root_));
        pred_arc_.assign(n_nodes_, -1);
        arc_up_.assign(n_nodes_, 0);
        flow_.assign(n_nodes_, 0);
        pot_.assign(n_nodes_, 0.0);
        depth_.assign(n_nodes_, 1);
        children_.assign(n_nodes_, {});
        parent_[root_] = -1;
        depth_[root_] = 0;
        for (std::size_t v = 0; v < ns_ + nt_; ++v) {
            children_[root_].push_back(static_cast<std::int32_t>(v));
            pred_arc_[v] = static_cast<std::int64_t>(ns_ * nt_ + v);
            if (v < ns_) {
                arc_up_[v] = 1; // source -> root
                flow_[v] = supply_[v];
                pot_[v] = -big_m_;
            } else {
                arc_up_[v] = 0; // root -> sink
                flow_[v] = demand_[v - ns_];
                pot_[v] = big_m_;
            }
        }
    }

    void pivot(std::size_t arc) {
        const std::int32_t u = static_cast<std::int32_t>(arc / nt_);
        const std::int32_t v = static_cast<std::int32_t>(ns_ + arc % nt_);

        // paths to the apex
        path_u_.clear();
        path_v_.clear();
        {
            std::int32_t a = u, b = v;
            while (depth_[a] > depth_[b]) {
                path_u_.push_back(a);
                a = parent_[a];
            }
            while (depth_[b] > depth_[a]) {
                path_v_.push_back(b);
                b = parent_[b];
            }
            while (a != b) {
                path_u_.push_back(a);
                path_v_.push_back(b);
                a = parent_[a];
                b = parent_[b];
            }
        }

        // residual of a path node: pushing t around the cycle changes the
        // node's pred-arc flow by +t or -t depending on orientation
        auto u_side_decreases = [&](std::int32_t w) { return arc_up_[w] == 1; };
        auto v_side_decreases = [&](std::int32_t w) { return arc_up_[w] == 0; };

        std::int64_t t = std::numeric_limits<std::int64_t>::max();
        for (std::int32_t w : path_u_)
            if (u_side_decreases(w)) t = std::min(t, flow_[w]);
        for (std::int32_t w : path_v_)
            if (v_side_decreases(w)) t = std::min(t, flow_[w]);
        if (t == std::numeric_limits<std::int64_t>::max())
            throw NumericError("network simplex: unbounded pivot cycle");

        // leaving arc: last blocking arc traversing the cycle in push
        // direction starting at the apex (keeps the tree strongly feasible)
        std::int32_t leave = -1;
        bool leave_on_u = true;
        for (auto it = path_u_.rbegin(); it != path_u_.rend(); ++it)
            if (u_side_decreases(*it) && flow_[*it] == t) {
                leave = *it;
                leave_on_u = true;
            }
        for (std::int32_t w : path_v_)
            if (v_side_decreases(w) && flow_[w] == t) {
                leave = w;
                leave_on_u = false;
            }

        // apply the flow change
        if (t > 0) {
            for (std::int32_t w : path_u_) flow_[w] += u_side_decreases(w) ? -t : t;
            for (std::int32_t w : path_v_) flow_[w] += v_side_decreases(w) ? -t : t;
        }

        if (leave < 0) throw NumericError("network simplex: no leaving arc");

        // re-hang the detached subtree on the entering arc
        const std::int32_t sub_root = leave_on_u ? u : v;
        const std::int32_t attach_to = leave_on_u ? v : u;

        // reverse parent pointers from sub_root up to `leave`
        std::int32_t w = sub_root;
        std::int32_t prev_parent = parent_[w];
        std::int64_t prev_arc = pred_arc_[w];
        std::uint8_t prev_up = arc_up_[w];
        std::int64_t prev_flow = flow_[w];
        while (w != leave) {
            const std::int32_t pw = prev_parent;
            const std::int32_t next_parent = parent_[pw];
            const std::int64_t next_arc = pred_arc_[pw];
            const std::uint8_t next_up = arc_up_[pw];
            const std::int64_t next_flow = flow_[pw];
            remove_child(pw, w);
            parent_[pw] = w;
            children_[w].push_back(pw);
            pred_arc_[pw] = prev_arc;
            arc_up_[pw] = prev_up ? 0 : 1;
            flow_[pw] = prev_flow;
            w = pw;
            prev_parent = next_parent;
            prev_arc = next_arc;
            prev_up = next_up;
            prev_flow = next_flow;
        }
        remove_child(prev_parent, w); // drops the leaving arc's edge

        parent_[sub_root] = attach_to;
        children_[attach_to].push_back(sub_root);
        pred_arc_[sub_root] = static_cast<std::int64_t>(arc);
        arc_up_[sub_root] = leave_on_u ? 1 : 0; // u->v arc: u points up iff subtree rooted at u
        flow_[sub_root] = t;

        // shift potentials and recompute depths over the moved subtree
        const double c = cost_[arc];
        const double new_pot =
            leave_on_u ? pot_[attach_to] - c /* pot[u]: c + pot[u] - pot[v] = 0 */
                       : pot_[attach_to] + c;
        const double delta = new_pot - pot_[sub_root];
        stack_.clear();
        stack_.push_back(sub_root);
        while (!stack_.empty()) {
            const std::int32_t x = stack_.back();
            stack_.pop_back();
            pot_[x] += delta;
            depth_[x] = depth_[parent_[x]] + 1;
            for (std::int32_t ch : children_[x]) stack_.push_back(ch);
        }
    }

    void remove_child(std::int32_t p, std::int32_t c) {
        auto& vec = children_[p];
        for (auto& x : vec)
            if (x == c) {
                x = vec.back();
                vec.pop_back();
                return;
            }
    }

    std::size_t ns_, nt_, n_nodes_, root_;
    std::vector<std::int64_t> supply_, demand_;
    std::int64_t total_ = 0;
    std::vector<double> cost_;
    double big_m_ = 0.0, tol_ = 0.0;

    std::vector<std::int32_t> parent_;
    std::vector<std::int64_t> pred_arc_;
    std::vector<std::uint8_t> arc_up_;
    std::vector<std::int64_t> flow_;
    std::vector<double> pot_;
    std::vector<std::int32_t> depth_;
    std::vector<std::vector<std::int32_t>> children_;
    std::vector<std::int32_t> path_u_, path_v_, stack_;
    std::uint64_t pivots_ = 0;
};

// ---------------------------------------------------------------------------
// Dinic max-flow (for bottleneck feasibility)

class Dinic {
public:
    explicit Dinic(std::size_t n) : head_(n, -1), level_(n), iter_(n) {}

    void add_edge(int from, int to, std::int64_t cap) {
        edges_.push_back({to, head_[from], cap});
        head_[from] = static_cast<int>(edges_.size()) - 1;
        edges_.push_back({from, head_[to], 0});
        head_[to] = static_cast<int>(edges_.size()) - 1;
    }

    std::int64_t max_flow(int s, int t) {
        std::int64_t flow = 0;
        while (bfs(s, t)) {
            iter_ = head_;
            while (std::int64_t f = dfs(s, t, std::numeric_limits<std::int64_t>::max())) flow += f;
        }
        return flow;
    }

    template <typename F>
    void for_positive_forward_edges(F&& fn) const {
        for (std::size_t e = 0; e < edges_.size(); e += 2) {
            const std::int64_t sent = edges_[e + 1].cap; // reverse residual = flow sent
            if (sent > 0) fn(e, sent);
        }
    }

private:
    struct Edge {
        int to;
        int next;
        std::int64_t cap;
    };

    bool bfs(int s, int t) {
        std::fill(level_.begin(), level_.end(), -1);
        queue_.clear();
        queue_.push_back(s);
        level_[s] = 0;
        for (std::size_t qi = 0; qi < queue_.size(); ++qi) {
            const int v = queue_[qi];
            for (int e = head_[v]; e >= 0; e = edges_[e].next)
                if (edges_[e].cap > 0 && level_[edges_[e].to] < 0) {
                    level_[edges_[e].to] = level_[v] + 1;
                    queue_.push_back(edges_[e].to);
                }
        }
        return level_[t] >= 0;
    }

    std::int64_t dfs(int v, int t, std::int64_t limit) {
        if (v == t) return limit;
        for (int& e = iter_[v]; e >= 0; e = edges_[e].next) {
            Edge& ed = edges_[e];
            if (ed.cap > 0 && level_[ed.to] == level_[v] + 1) {
                const std::int64_t f = dfs(ed.to, t, std::min(limit, ed.cap));
                if (f > 0) {
                    ed.cap -= f;
                    edges_[e ^ 1].cap += f;
                    return f;
                }
            }
        }
        level_[v] = -1;
        return 0;
    }

    std::vector<int> head_, level_, iter_, queue_;
    std::vector<Edge> edges_;
};

} // namespace

// ---------------------------------------------------------------------------

void TransportPlan::check(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double tol) const {
    std::vector<double> out(mu.size(), 0.0), in(nu.size(), 0.0);
    double recomputed = 0.0, max_edge = 0.0;
    for (const auto& e : entries) {
        if (e.src < 0 || static_cast<std::size_t>(e.src) >= mu.size() || e.dst < 0 ||
            static_cast<std::size_t>(e.dst) >= nu.size() || !(e.mass > 0.0))
            throw InvalidInputError("transport plan: malformed entry");
        out[e.src] += e.mass;
        in[e.dst] += e.mass;
        const double r = pair_dist(mu, e.src, nu, e.dst);
        max_edge = std::max(max_edge, r);
        recomputed += e.mass * (order_p == 2.0 ? r * r : r);
    }
    for (std::size_t i = 0; i < mu.size(); ++i)
        if (std::abs(out[i] - mu.masses[i]) > tol)
            throw InvalidInputError("transport plan: source marginal mismatch");
    for (std::size_t j = 0; j < nu.size(); ++j)
        if (std::abs(in[j] - nu.masses[j]) > tol)
            throw InvalidInputError("transport plan: target marginal mismatch");
    const double c = std::isinf(order_p) ? max_edge : recomputed;
    if (std::abs(c - cost) > tol * std::max(1.0, std::abs(cost)))
        throw InvalidInputError("transport plan: cost inconsistent with entries");
}

DistanceResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, int p,
                             const TransportLimits& limits) {
    if (p != 1 && p != 2) throw InvalidInputError("wasserstein_p: order must be 1 or 2");
    check_compatible(mu, nu, limits);

    NetworkSimplex simplex(mu, nu, p, units_for_pair(mu.masses, nu.masses));
    simplex.solve();

    DistanceResult res;
    res.solver = "network-simplex";
    res.pivots = simplex.pivots();
    res.plan.order_p = p;
    const double unit_total = static_cast<double>(simplex.total_units());
    double total = 0.0;
    simplex.for_basic_flows([&](std::size_t i, std::size_t j, std::int64_t units) {
        const double mass = static_cast<double>(units) / unit_total;
        res.plan.entries.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j), mass});
        total += mass * simplex.arc_cost(i, j);
    });
    res.plan.cost = total;
    res.distance = (p == 2) ? std::sqrt(total) : total;
    return res;
}

namespace {

// Nearest-neighbour distance from each atom of `a` to `b` (exact).
std::vector<double> nn_distances(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    const int d = a.dim;
    std::vector<double> out(a.size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : b.positions) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double extent = std::max(hi - lo, 1e-300);
    if (d > 3 || a.size() * b.size() < 16384) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < b.size(); ++j) best = std::min(best, pair_dist(a, i, b, j));
            out[i] = best;
        }
        return out;
    }
    const double cell = extent / std::max(1.0, std::floor(std::pow(static_cast<double>(b.size()), 1.0 / d)));
    BucketGrid grid(b.positions, d, b.size(), cell);
    if (!grid.usable()) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < b.size(); ++j) best = std::min(best, pair_dist(a, i, b, j));
            out[i] = best;
        }
        return out;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double* x = a.positions.data() + i * d;
        double radius = cell;
        double best = std::numeric_limits<double>::infinity();
        for (int attempt = 0; attempt < 64; ++attempt) {
            grid.for_candidates(x, radius, [&](int j) {
                best = std::min(best, pair_dist(a, i, b, static_cast<std::size_t>(j)));
            });
            if (best <= radius) break;
            radius = std::isfinite(best) ? best * 1.0000001 : radius * 4.0;
        }
        out[i] = best;
    }
    return out;
}

} // namespace

DistanceResult wasserstein_infinity(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                    const TransportLimits& limits) {
    check_compatible(mu, nu, limits);
    const int d = mu.dim;
    const std::size_t ns = mu.size(), nt = nu.size();
    const auto units = units_for_pair(mu.masses, nu.masses);
    const auto& supply = units.supply;
    const auto& demand = units.demand;

    // necessity bound: every atom must reach some partner
    const auto nn_mu = nn_distances(mu, nu);
    const auto nn_nu = nn_distances(nu, mu);
    double lb = 0.0;
    for (double v : nn_mu) lb = std::max(lb, v);
    for (double v : nn_nu) lb = std::max(lb, v);

    const int s_node = 0, t_node = static_cast<int>(ns + nt) + 1;
    std::uint64_t probes = 0;

    auto feasible = [&](double t, Dinic* keep) {
        Dinic dinic(ns + nt + 2);
        for (std::size_t i = 0; i < ns; ++i) dinic.add_edge(s_node, static_cast<int>(1 + i), supply[i]);
        for (std::size_t j = 0; j < nt; ++j)
            dinic.add_edge(static_cast<int>(1 + ns + j), t_node, demand[j]);
        // middle edges: pairs within threshold t
        const double cell = std::max(t, 1e-300);
        BucketGrid grid(nu.positions, d, nt, cell);
        if (grid.usable() && ns * nt >= 16384) {
            for (std::size_t i = 0; i < ns; ++i) {
                const double* x = mu.positions.data() + i * d;
                grid.for_candidates(x, t, [&](int j) {
                    if (pair_dist(mu, i, nu, static_cast<std::size_t>(j)) <= t)
                        dinic.add_edge(static_cast<int>(1 + i), static_cast<int>(1 + ns + j),
                                       std::min(supply[i], demand[j]));
                });
            }
        } else {
            for (std::size_t i = 0; i < ns; ++i)
                for (std::size_t j = 0; j < nt; ++j)
                    if (pair_dist(mu, i, nu, j) <= t)
                        dinic.add_edge(static_cast<int>(1 + i), static_cast<int>(1 + ns + j),
                                       std::min(supply[i], demand[j]));
        }
        ++probes;
        const bool ok = dinic.max_flow(s_node, t_node) == units.total;
        if (ok && keep) *keep = std::move(dinic);
        return ok;
    };

    // bracket: grow an upper bound from the necessity value
    double hi = std::max(lb, 1e-300);
    while (!feasible(hi, nullptr)) hi *= 2.0;

    // candidate thresholds: attained pairwise distances in [lb, hi]
    std::vector<double> cand;
    {
        BucketGrid grid(nu.positions, d, nt, std::max(hi, 1e-300));
        if (grid.usable() && ns * nt >= 16384) {
            for (std::size_t i = 0; i < ns; ++i) {
                const double* x = mu.positions.data() + i * d;
                grid.for_candidates(x, hi, [&](int j) {
                    const double r = pair_dist(mu, i, nu, static_cast<std::size_t>(j));
                    if (r >= lb && r <= hi) cand.push_back(r);
                });
            }
        } else {
            for (std::size_t i = 0; i < ns; ++i)
                for (std::size_t j = 0; j < nt; ++j) {
                    const double r = pair_dist(mu, i, nu, j);
                    if (r >= lb && r <= hi) cand.push_back(r);
                }
        }
    }
    cand.push_back(hi);
    if (lb > 0.0) cand.push_back(lb);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    std::size_t a = 0, b = cand.size() - 1; // cand[b] feasible
    if (feasible(cand[a], nullptr)) {
        b = a;
    } else {
        while (b - a > 1) {
            const std::size_t mid = a + (b - a) / 2;
            if (feasible(cand[mid], nullptr)) b = mid;
            else a = mid;
        }
    }
    const double t_star = cand[b];

    Dinic witness(ns + nt + 2);
    feasible(t_star, &witness);

    DistanceResult res;
    res.solver = "bottleneck-maxflow";
    res.pivots = probes;
    res.distance = t_star;
    res.plan.order_p = std::numeric_limits<double>::infinity();
    res.plan.cost = t_star;

    // edges were added in order: ns supply edges, nt demand edges, then middle
    std::size_t middle_start = 2 * (ns + nt);
    std::vector<std::pair<std::size_t, std::int64_t>> flows;
    witness.for_positive_forward_edges([&](std::size_t e, std::int64_t sent) {
        if (e >= middle_start) flows.push_back({e, sent});
    });
    // recover endpoints by replaying the edge construction order
    std::vector<std::pair<std::int32_t, std::int32_t>> middle_pairs;
    {
        const double cell = std::max(t_star, 1e-300);
        BucketGrid grid(nu.positions, d, nt, cell);
        if (grid.usable() && ns * nt >= 16384) {
            for (std::size_t i = 0; i < ns; ++i) {
                const double* x = mu.positions.data() + i * d;
                grid.for_candidates(x, t_star, [&](int j) {
                    if (pair_dist(mu, i, nu, static_cast<std::size_t>(j)) <= t_star)
                        middle_pairs.push_back({static_cast<std::int32_t>(i), j});
                });
            }
        } else {
            for (std::size_t i = 0; i < ns; ++i)
                for (std::size_t j = 0; j < nt; ++j)
                    if (pair_dist(mu, i, nu, j) <= t_star)
                        middle_pairs.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)});
        }
    }
    for (auto [e, sent] : flows) {
        const std::size_t k = (e - middle_start) / 2;
        res.plan.entries.push_back(
            {middle_pairs[k].first, middle_pairs[k].second,
             static_cast<double>(sent) / static_cast<double>(units.total)});
    }
    return res;
}

double brute_force_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
    mu.check_normalized();
    nu.check_normalized();
    if (mu.dim != nu.dim) throw InvalidInputError("brute_force_distance: dimension mismatch");
    const std::size_t n = mu.size();
    if (n != nu.size()) throw InvalidInputError("brute_force_distance: atom counts must match");
    if (n > 8) throw CapacityError("brute_force_distance: more than 8 atoms");
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(mu.masses[i] - 1.0 / n) > 1e-12 || std::abs(nu.masses[i] - 1.0 / n) > 1e-12)
            throw InvalidInputError("brute_force_distance: masses must be equal");
    if (!(p == 1.0 || p == 2.0 || std::isinf(p)))
        throw InvalidInputError("brute_force_distance: order must be 1, 2 or inf");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = pair_dist(mu, i, nu, perm[i]);
            if (std::isinf(p)) acc = std::max(acc, r);
            else acc += (p == 2.0 ? r * r : r) / static_cast<double>(n);
        }
        best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return p == 2.0 ? std::sqrt(best) : best;
}

SemidiscreteResult semidiscrete_distance(const EmpiricalMeasure& mu, const DensitySpec& rho,
                                         double p, std::size_t refinement,
                                         const TransportLimits& limits) {
    if (!(p == 1.0 || std::isinf(p)))
        throw InvalidInputError("semidiscrete_distance: order must be 1 or inf");
    if (refinement < 10 * mu.size())
        throw InvalidInputError("semidiscrete_distance: refinement must be at least 10x the atom count");
    const int d = rho.dim();
    double extent = 0.0;
    for (int k = 0; k < d; ++k) extent = std::max(extent, rho.box_hi()[k] - rho.box_lo()[k]);

    std::size_t n_axis =
        static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(refinement), 1.0 / d)));
    EmpiricalMeasure grid;
    double mesh = 0.0;
    for (;; ++n_axis) {
        mesh = extent / static_cast<double>(n_axis);
        grid = grid_init(rho, mesh);
        if (grid.size() >= refinement) break;
        if (n_axis > 1u << 20) throw CapacityError("semidiscrete_distance: refinement unattainable");
    }
    if (mu.size() * grid.size() > limits.max_pair_product)
        throw CapacityError("semidiscrete_distance: pair product exceeds the configured limit");

    SemidiscreteResult out;
    out.mesh = mesh;
    out.ref_atoms = grid.size();
    out.error_bar = 0.5 * std::sqrt(static_cast<double>(d)) * mesh;
    out.estimate = std::isinf(p) ? wasserstein_infinity(mu, grid, limits).distance
                                 : wasserstein_p(mu, grid, 1, limits).distance;
    return out;
}

} // namespace mfl
