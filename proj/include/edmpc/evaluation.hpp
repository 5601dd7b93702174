#ifndef EDMPC_EVALUATION_HPP
#define EDMPC_EVALUATION_HPP

#include "edmpc/edm.hpp"
#include "edmpc/embedding.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace edmpc {

/// Skill as a function of one parameter (E, Tp or theta).
struct ScanResult {
    std::string parameter;
    std::vector<double> axis;
    std::vector<SkillReport> skill;
    /// Parameters held fixed during the scan, for provenance.
    std::map<std::string, std::string> fixed;

    std::vector<double> rho() const;
    /// Axis value with the largest non-degenerate rho; the smallest such value on ties.
    double best_value() const;
    double rho_at(double value) const;
};

/// Simplex skill for E = E_min..E_max at horizon tp (tau = 1). Rows are aligned
/// on the origins valid for E_max so every E is scored on the same points; the
/// first `split` fraction is the library and the rest is predicted.
ScanResult embed_dimension_scan(std::span<const double> series, int E_max, int tp, double split = 0.6, int E_min = 1);

/// Simplex skill for Tp = 1..tp_max at fixed E, aligned on the origins valid at tp_max.
ScanResult tp_scan(std::span<const double> series, int E, int tp_max, double split = 0.6);

inline const std::vector<double>& default_theta_grid() {
    static const std::vector<double> grid{0.0, 0.1, 0.3, 1.0, 2.0, 3.0, 5.0, 9.0};
    return grid;
}

/// S-map skill per theta, fitting on the leading rows of `library` and scoring
/// on the trailing `validation_fraction` of them.
ScanResult theta_scan(const Embedding& library, std::span<const double> grid = default_theta_grid(),
                      double validation_fraction = 0.2);

struct OutOfSampleResult {
    SkillReport skill;
    std::vector<long> times; ///< origin tick of each prediction row
    std::vector<double> observed;
    std::vector<double> predicted;
    std::size_t library_rows = 0;
};

/// S-map cross-map skill: library rows from `library`, predictions for `prediction`.
OutOfSampleResult evaluate_out_of_sample(const Frame& frame, const EmbeddingSpec& spec, TimeRange library,
                                         TimeRange prediction, double theta);

/// `param,rho,mae,rmse,n`; degenerate skill is written as the token `degenerate`.
void write_scan_csv(std::ostream& out, const ScanResult& scan);

} // namespace edmpc

#endif
