#pragma once

// Plug-in duration regression: per-charge-point ordinary least squares on
// calendar and usage features, scored by chronological k-fold
// cross-validation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "civil_time.hpp"
#include "dataset.hpp"
#include "error.hpp"

namespace evcharge {

struct FeatureVector {
    int start_hour = 0;   // 0-23
    int day_of_week = 1;  // 1 = Monday ... 7 = Sunday
    double hours_since_last = 0.0;
    double energy_kwh = 0.0;
};

struct FeatureRow {
    FeatureVector features;
    double target_hours = 0.0;
};

struct RegressionModel {
    double intercept = 0.0;
    std::vector<double> coefficients;

    double predict(std::span<const double> x) const {
        if (x.size() != coefficients.size()) throw Error("feature count does not match the model");
        double y = intercept;
        for (std::size_t i = 0; i < x.size(); ++i) y += coefficients[i] * x[i];
        return y;
    }
};

struct PredictionMetrics {
    double mae = 0.0;   // hours
    double mape = 0.0;  // percent
    double mse = 0.0;   // hours^2
    std::size_t n = 0;
    std::size_t mape_excluded = 0;  // rows whose actual duration is ~0
};

inline constexpr double kMapeMinActualHours = 1e-6;

/// One row per session after the first; the target is the plug-in duration.
inline std::vector<FeatureRow> extract_features(std::span<const Session> sessions) {
    std::vector<FeatureRow> rows;
    if (sessions.size() < 2) return rows;
    rows.reserve(sessions.size() - 1);
    for (std::size_t i = 1; i < sessions.size(); ++i) {
        const auto& s = sessions[i];
        double gap = static_cast<double>(s.start - sessions[i - 1].end) / kSecondsPerHour;
        if (gap < 0.0) throw Error("sessions overlap; clean the data before extracting features");
        rows.push_back({{hour_of_day(s.start), iso_weekday(s.start), gap, s.energy_kwh}, s.plugin_hours});
    }
    return rows;
}

inline std::size_t feature_count(bool include_energy) { return include_energy ? 4 : 3; }

inline void feature_values(const FeatureVector& f, bool include_energy, std::span<double> out) {
    out[0] = f.start_hour;
    out[1] = f.day_of_week;
    out[2] = f.hours_since_last;
    if (include_energy) out[3] = f.energy_kwh;
}

inline Eigen::MatrixXd design_matrix(std::span<const FeatureRow> rows, bool include_energy) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_count(include_energy)));
    std::vector<double> buf(feature_count(include_energy));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        feature_values(rows[r].features, include_energy, buf);
        for (std::size_t c = 0; c < buf.size(); ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = buf[c];
    }
    return x;
}

/// Least-squares fit with intercept. Columns are centred first, so a
/// constant column is detected as rank-deficient and gets coefficient 0;
/// collinear columns are dropped by the pivoted QR.
inline RegressionModel fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto n = x.rows();
    const auto p = x.cols();
    if (n == 0 || y.size() != n) throw Error("regression needs matching, non-empty features and targets");
    RegressionModel model;
    model.coefficients.assign(static_cast<std::size_t>(p), 0.0);

    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    model.intercept = y_mean;
    if (p == 0) return model;

    const Eigen::MatrixXd xc = x.rowwise() - x_mean;
    const Eigen::VectorXd yc = y.array() - y_mean;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    qr.setThreshold(1e-10);
    qr.compute(xc);
    const auto rank = qr.rank();
    if (rank == 0) return model;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    if (rank == p) {
        beta = qr.solve(yc);
    } else {
        const auto& perm = qr.colsPermutation().indices();
        Eigen::MatrixXd kept(n, rank);
        for (Eigen::Index j = 0; j < rank; ++j) kept.col(j) = xc.col(perm(j));
        Eigen::VectorXd sub = kept.colPivHouseholderQr().solve(yc);
        for (Eigen::Index j = 0; j < rank; ++j) beta(perm(j)) = sub(j);
    }
    for (Eigen::Index j = 0; j < p; ++j) model.coefficients[static_cast<std::size_t>(j)] = beta(j);
    model.intercept = y_mean - x_mean.dot(beta);
    return model;
}

inline RegressionModel fit_ols(std::span<const FeatureRow> rows, bool include_energy) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = rows[i].target_hours;
    return fit_ols(design_matrix(rows, include_energy), y);
}

inline PredictionMetrics prediction_metrics(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw Error("prediction and actual lengths differ");
    PredictionMetrics m;
    m.n = actual.size();
    if (m.n == 0) return m;
    std::size_t mape_n = 0;
    for (std::size_t i = 0; i < m.n; ++i) {
        double err = predicted[i] - actual[i];
        m.mae += std::abs(err);
        m.mse += err * err;
        if (std::abs(actual[i]) < kMapeMinActualHours) {
            ++m.mape_excluded;
        } else {
            m.mape += std::abs(err) / std::abs(actual[i]);
            ++mape_n;
        }
    }
    m.mae /= static_cast<double>(m.n);
    m.mse /= static_cast<double>(m.n);
    m.mape = mape_n == 0 ? 0.0 : 100.0 * m.mape / static_cast<double>(mape_n);
    return m;
}

/// Chronological contiguous k-fold cross-validation for one charge point.
/// Returns nothing when there are fewer feature rows than folds.
inline std::optional<PredictionMetrics> cross_validate(std::span<const Session> sessions, std::size_t folds,
                                                       bool include_energy) {
    if (folds < 2) throw Error("cross-validation needs at least two folds");
    const auto rows = extract_features(sessions);
    const std::size_t m = rows.size();
    if (m < folds) return std::nullopt;

    std::vector<double> predicted(m);
    std::vector<double> actual(m);
    std::vector<FeatureRow> train;
    std::vector<double> x(feature_count(include_energy));
    for (std::size_t k = 0; k < folds; ++k) {
        const std::size_t lo = k * m / folds;
        const std::size_t hi = (k + 1) * m / folds;
        train.clear();
        train.insert(train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(lo));
        train.insert(train.end(), rows.begin() + static_cast<std::ptrdiff_t>(hi), rows.end());
        const auto model = fit_ols(train, include_energy);
        for (std::size_t i = lo; i < hi; ++i) {
            feature_values(rows[i].features, include_energy, x);
            predicted[i] = model.predict(x);
            actual[i] = rows[i].target_hours;
        }
    }
    return prediction_metrics(predicted, actual);
}

struct PredictionSummary {
    PredictionMetrics mean;  // unweighted mean over evaluated charge points
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

inline PredictionSummary summarize(std::span<const std::optional<PredictionMetrics>> per_cp) {
    PredictionSummary s;
    for (const auto& m : per_cp) {
        if (!m) {
            ++s.skipped;
            continue;
        }
        ++s.evaluated;
        s.mean.mae += m->mae;
        s.mean.mape += m->mape;
        s.mean.mse += m->mse;
        s.mean.n += m->n;
        s.mean.mape_excluded += m->mape_excluded;
    }
    if (s.evaluated > 0) {
        double k = static_cast<double>(s.evaluated);
        s.mean.mae /= k;
        s.mean.mape /= k;
        s.mean.mse /= k;
    }
    return s;
}

}  // namespace evcharge
