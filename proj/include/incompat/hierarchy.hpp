#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "incompat/multicopy.hpp"
#include "incompat/simgrid.hpp"
#include "incompat/structures.hpp"

namespace incompat {

/// One computed threshold with its solve status and runtime. `eta` is empty
/// when the entry could not be computed (inconclusive solver, dimension
/// guard); `status` says why.
struct ProfileEntry {
    std::optional<double> eta;
    std::string status = "ok";
    double runtime_sec = 0.0;

    bool ok() const { return eta.has_value(); }
};

/// Critical visibilities of one assemblage across the inclusion chain,
/// plus the universal cloning bound. The chain must satisfy
///   jm <= sim_det <= sim_fixed <= nwise <= ncopy  and  clone <= ncopy
/// within `chain_tolerance`; threshold_profile treats any violation as an
/// implementation bug and throws.
struct ThresholdProfile {
    std::string descriptor;
    int n = 1;
    double chain_tolerance = 1e-4;
    double solve_tolerance = conic::kDefaultSolveTol;

    ProfileEntry jm;         // standard joint measurability (all settings)
    ProfileEntry sim_det;    // deterministic n-simulability
    ProfileEntry sim_fixed;  // best fixed pre-processing (lower bound)
    ProfileEntry nwise;      // n-wise compatibility = Conv(SIM_n)
    ProfileEntry ncopy;      // n-copy joint measurability
    ProfileEntry clone;      // cloning bound, analytic

    PartitionCollection det_witness;
    RMatrix best_pre;  // strategy attaining sim_fixed
};

class hierarchy_violation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {

class StopWatch {
public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

template <typename Fn>
ProfileEntry timed_entry(Fn&& fn) {
    StopWatch watch;
    ProfileEntry entry;
    try {
        entry.eta = fn();
    } catch (const conic::inconclusive_error& e) {
        entry.status = std::string("inconclusive: ") + e.what();
    } catch (const std::invalid_argument& e) {
        entry.status = std::string("skipped: ") + e.what();
    }
    entry.runtime_sec = watch.seconds();
    return entry;
}

inline void check_chain(const std::string& what, const ProfileEntry& lo, const ProfileEntry& hi,
                        double tol) {
    if (!lo.ok() || !hi.ok()) return;
    if (*lo.eta > *hi.eta + tol) {
        std::ostringstream os;
        os << "hierarchy violation (" << what << "): " << *lo.eta << " > " << *hi.eta
           << " + " << tol;
        throw hierarchy_violation(os.str());
    }
}

}  // namespace detail

/// Computes every threshold for A at the given n. `pre_strategies` are extra
/// fixed pre-processings to try for the simulability lower bound; the
/// deterministic witness partition is always included among them.
inline ThresholdProfile threshold_profile(const Assemblage& a, int n,
                                          const std::vector<PreProcessing>& pre_strategies = {},
                                          double tol = conic::kDefaultSolveTol,
                                          std::string descriptor = "assemblage") {
    if (n < 1 || n > a.settings()) {
        throw std::invalid_argument("threshold_profile: need 1 <= n <= m");
    }
    ThresholdProfile profile;
    profile.descriptor = std::move(descriptor);
    profile.n = n;
    profile.solve_tolerance = tol;

    profile.jm = detail::timed_entry([&] { return jm_visibility(a, detail::full_subset(a), tol).eta(); });

    {
        detail::StopWatch watch;
        try {
            auto [vis, witness] = sim_det_visibility_with_witness(a, n, tol);
            profile.sim_det.eta = vis.eta();
            profile.det_witness = witness;
        } catch (const conic::inconclusive_error& e) {
            profile.sim_det.status = std::string("inconclusive: ") + e.what();
        }
        profile.sim_det.runtime_sec = watch.seconds();
    }

    {
        detail::StopWatch watch;
        std::vector<PreProcessing> strategies = pre_strategies;
        if (profile.sim_det.ok()) {
            RMatrix det = RMatrix::Zero(a.settings(), n);
            for (int x = 0; x < a.settings(); ++x) {
                det(x, profile.det_witness.block_of(x)) = 1.0;
            }
            strategies.emplace_back(det);
        }
        if (strategies.empty()) {
            profile.sim_fixed.status = "skipped: no strategies supplied";
        } else {
            try {
                double best = -1.0;
                for (const auto& pre : strategies) {
                    const double vis = sim_fixed_pre_visibility(a, n, pre, tol).eta();
                    if (vis > best) {
                        best = vis;
                        profile.best_pre = pre.probs();
                    }
                }
                profile.sim_fixed.eta = best;
            } catch (const conic::inconclusive_error& e) {
                profile.sim_fixed.status = std::string("inconclusive: ") + e.what();
            } catch (const std::invalid_argument& e) {
                profile.sim_fixed.status = std::string("skipped: ") + e.what();
            }
        }
        profile.sim_fixed.runtime_sec = watch.seconds();
    }

    profile.nwise = detail::timed_entry([&] { return nwise_visibility(a, n, tol).eta(); });
    profile.ncopy = detail::timed_entry([&] { return ncopy_visibility(a, n, tol).eta(); });
    profile.clone =
        detail::timed_entry([&] { return clone_bound(a.dim(), a.settings(), n).eta(); });

    const double ctol = profile.chain_tolerance;
    detail::check_chain("jm <= sim_det", profile.jm, profile.sim_det, ctol);
    detail::check_chain("sim_det <= sim_fixed", profile.sim_det, profile.sim_fixed, ctol);
    detail::check_chain("sim_fixed <= nwise", profile.sim_fixed, profile.nwise, ctol);
    detail::check_chain("sim_det <= nwise", profile.sim_det, profile.nwise, ctol);
    detail::check_chain("nwise <= ncopy", profile.nwise, profile.ncopy, ctol);
    detail::check_chain("clone <= ncopy", profile.clone, profile.ncopy, ctol);
    return profile;
}

/// Property harness: threshold profiles over seeded random assemblages.
/// Chain violations are caught and reported; the expected count is zero.
struct FuzzReport {
    int d = 2, m = 1, k = 2, n = 1;
    int count = 0;
    std::uint64_t seed = 0;
    std::vector<ThresholdProfile> profiles;
    std::vector<std::string> violations;
    std::vector<std::string> inconclusive;

    std::optional<double> min_jm() const {
        std::optional<double> out;
        for (const auto& p : profiles) {
            if (p.jm.ok() && (!out || *p.jm.eta < *out)) out = *p.jm.eta;
        }
        return out;
    }
};

inline FuzzReport hierarchy_fuzz(int d, int m, int k, int n, int count, std::uint64_t seed,
                                 double tol = conic::kDefaultSolveTol, int jobs = 1) {
    if (count < 0) throw std::invalid_argument("hierarchy_fuzz: count must be >= 0");
    if (jobs < 1) throw std::invalid_argument("hierarchy_fuzz: jobs must be >= 1");
    FuzzReport report;
    report.d = d;
    report.m = m;
    report.k = k;
    report.n = n;
    report.count = count;
    report.seed = seed;

    // Profiles over distinct assemblages are independent; run them as a
    // parallel map with a deterministic index-ordered fold.
    struct Outcome {
        std::optional<ThresholdProfile> profile;
        std::string violation;
        std::string inconclusive;
    };
    std::vector<Outcome> outcomes(static_cast<std::size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) break;
            const Assemblage a = random_assemblage(d, m, k, seed + static_cast<std::uint64_t>(i));
            auto& out = outcomes[static_cast<std::size_t>(i)];
            try {
                out.profile = threshold_profile(a, n, {}, tol, "random[" + std::to_string(i) + "]");
            } catch (const hierarchy_violation& e) {
                out.violation = e.what();
            } catch (const conic::inconclusive_error& e) {
                out.inconclusive = e.what();
            }
        }
    };
    if (jobs == 1 || count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int width = std::min(jobs, count);
        pool.reserve(static_cast<std::size_t>(width));
        for (int t = 0; t < width; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (int i = 0; i < count; ++i) {
        auto& out = outcomes[static_cast<std::size_t>(i)];
        if (out.profile) {
            report.profiles.push_back(std::move(*out.profile));
        } else if (!out.violation.empty()) {
            report.violations.push_back("assemblage " + std::to_string(i) + ": " + out.violation);
        } else {
            report.inconclusive.push_back("assemblage " + std::to_string(i) + ": " +
                                          out.inconclusive);
        }
    }
    return report;
}

/// Plain-text threshold table for one profile.
inline std::string format_profile_table(const ThresholdProfile& p) {
    std::ostringstream os;
    os << "thresholds for " << p.descriptor << " (n = " << p.n << ")\n";
    auto row = [&os](const char* name, const ProfileEntry& e) {
        os << "  " << name << ": ";
        if (e.ok()) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", *e.eta);
            os << buf;
        } else {
            os << e.status;
        }
        char tbuf[32];
        std::snprintf(tbuf, sizeof(tbuf), "%.3f", e.runtime_sec);
        os << "   (" << tbuf << " s)\n";
    };
    row("eta_jm       ", p.jm);
    row("eta_sim_det  ", p.sim_det);
    row("eta_sim_fixed", p.sim_fixed);
    row("eta_nwise    ", p.nwise);
    row("eta_ncopy    ", p.ncopy);
    row("clone_bound  ", p.clone);
    return os.str();
}

}  // namespace incompat
