#pragma once

// Trend-signal series and the derived control term of the state-space form.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace chiarella {

// EWMA of one-month log returns: m_0 = 0, m_t = (1-alpha) m_{t-1} + alpha (p_t - p_{t-1}).
inline std::vector<double> trend_signal(const std::vector<double>& prices, double alpha) {
    if (prices.size() < 2) throw std::invalid_argument("trend_signal: need at least 2 prices");
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("trend_signal: alpha in (0,1]");
    std::vector<double> m(prices.size(), 0.0);
    for (std::size_t t = 1; t < prices.size(); ++t)
        m[t] = (1.0 - alpha) * m[t - 1] + alpha * (prices[t] - prices[t - 1]);
    return m;
}

// u_t = tanh(gamma * m_{t-1}) for t = 1..T; the control driving the return
// from t-1 to t. u_1 is always 0 (m_0 = 0).
inline std::vector<double> control_series(const std::vector<double>& prices, double gamma,
                                          double alpha) {
    const std::vector<double> m = trend_signal(prices, alpha);
    std::vector<double> u(prices.size() - 1);
    for (std::size_t t = 0; t + 1 < prices.size(); ++t) u[t] = std::tanh(gamma * m[t]);
    return u;
}

} // namespace chiarella
