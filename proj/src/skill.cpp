#include "edmpc/edm.hpp"

#include "edmpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edmpc {

SkillReport pearson_rho(std::span<const double> predictions, std::span<const double> observations) {
    if (predictions.size() != observations.size()) {
        throw DataError("skill: prediction and observation lengths differ");
    }
    double sx = 0, sy = 0, abs_err = 0, sq_err = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double x = predictions[i], y = observations[i];
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        sx += x;
        sy += y;
        abs_err += std::abs(x - y);
        sq_err += (x - y) * (x - y);
        ++n;
    }
    if (n < 2) {
        throw DataError("skill needs at least 2 finite pairs, got " + std::to_string(n));
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double x = predictions[i], y = observations[i];
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    SkillReport r;
    r.n = n;
    r.mae = abs_err / static_cast<double>(n);
    r.rmse = std::sqrt(sq_err / static_cast<double>(n));
    if (sxx == 0.0 || syy == 0.0) {
        r.degenerate = true;
        r.rho = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return r;
}

} // namespace edmpc
