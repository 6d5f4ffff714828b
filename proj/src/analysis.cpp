#include "qlbm/analysis.hpp"

#include "qlbm/errors.hpp"
#include "qlbm/hash.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace qlbm::analysis {

using lbm::EqOrder;
using lbm::kD2Q9;
using lbm::kQ;

MapKind parse_map_kind(const std::string& s) {
    if (s == "linear") return MapKind::LinearA;
    if (s == "quadratic") return MapKind::QuadraticAB;
    if (s == "effective") return MapKind::EffectiveNonlinear;
    if (s == "effective_omega") return MapKind::EffectiveNonlinearOmega;
    throw ConfigError("unknown map kind '" + s + "' (expected linear, quadratic, effective, effective_omega)");
}

lbm::Populations frozen_collide(const lbm::Populations& f, lbm::Velocity u, double tau, EqOrder order) {
    double rho = 0.0, jx = 0.0, jy = 0.0;
    for (int i = 0; i < kQ; ++i) {
        rho += f[i];
        jx += f[i] * kD2Q9.cx[i];
        jy += f[i] * kD2Q9.cy[i];
    }
    const double cs2 = kD2Q9.cs2;
    const double uj = u.x * jx + u.y * jy;
    lbm::Populations out{};
    for (int i = 0; i < kQ; ++i) {
        const double cj = kD2Q9.cx[i] * jx + kD2Q9.cy[i] * jy;
        double feq = rho + cj / cs2;
        if (order == EqOrder::Quadratic) {
            const double cu = kD2Q9.cx[i] * u.x + kD2Q9.cy[i] * u.y;
            feq += cu * cj / (2.0 * cs2 * cs2) - uj / (2.0 * cs2);
        }
        out[i] = f[i] + (kD2Q9.w[i] * feq - f[i]) / tau;
    }
    return out;
}

namespace {

Matrix9 probe(lbm::Velocity u, double tau, EqOrder order) {
    Matrix9 m;
    for (int j = 0; j < kQ; ++j) {
        lbm::Populations e{};
        e[j] = 1.0;
        const auto col = frozen_collide(e, u, tau, order);
        for (int i = 0; i < kQ; ++i) m(i, j) = col[i];
    }
    return m;
}

} // namespace

Matrix9 right_divide(const Matrix9& x, const Matrix9& a) {
    Eigen::FullPivLU<Matrix9> lu(a);
    lu.setThreshold(1e-10);
    if (lu.isInvertible()) return x * lu.inverse();
    const Matrix9 a3 = a * a * a;
    Eigen::CompleteOrthogonalDecomposition<Matrix9> cod(a3);
    cod.setThreshold(1e-10);
    const Matrix9 group = a * cod.pseudoInverse() * a;
    if (!(group.array().isFinite().all())) throw NumericalError("group inverse is not finite");
    return x * group;
}

FrozenCollisionMap build_frozen_map(lbm::Velocity u, double tau, MapKind kind) {
    if (!(tau > 0.5) || !std::isfinite(tau)) throw ConfigError("frozen map: tau must exceed 0.5");
    if (!(std::hypot(u.x, u.y) < std::sqrt(kD2Q9.cs2))) throw ConfigError("frozen map: |u| must be below c_s");
    FrozenCollisionMap m;
    m.u = u;
    m.tau = tau;
    m.kind = kind;
    const Matrix9 I = Matrix9::Identity();
    switch (kind) {
    case MapKind::LinearA: m.matrix = probe(u, tau, EqOrder::Linear); break;
    case MapKind::QuadraticAB: m.matrix = probe(u, tau, EqOrder::Quadratic); break;
    case MapKind::EffectiveNonlinear: {
        const Matrix9 a = probe(u, 1.0, EqOrder::Linear);
        const Matrix9 b = probe(u, 1.0, EqOrder::Quadratic) - a;
        m.matrix = I + right_divide(b, a);
        break;
    }
    case MapKind::EffectiveNonlinearOmega: {
        const double omega = 1.0 / tau;
        const Matrix9 a = probe(u, 1.0, EqOrder::Linear);
        const Matrix9 b = probe(u, 1.0, EqOrder::Quadratic) - a;
        const Matrix9 at = omega == 1.0 ? a : Matrix9(I + omega * (a - I));
        m.matrix = I + omega * right_divide(b, at);
        break;
    }
    }
    if (!m.matrix.array().isFinite().all()) throw NumericalError("frozen map has non-finite entries");
    return m;
}

NonUnitarity nonunitarity(const Matrix9& m) {
    Eigen::JacobiSVD<Matrix9> svd(m);
    const auto s = svd.singularValues();
    NonUnitarity r;
    for (int k = 0; k < 9; ++k) {
        r.sigmas[static_cast<std::size_t>(k)] = s(k);
        r.metric += (1.0 - s(k)) * (1.0 - s(k));
    }
    r.sigma_max = s(0);
    return r;
}

// ---------------------------------------------------------------------------

ExpQuadFit fit_exp_quadratic(std::span<const double> u, std::span<const double> mse) {
    if (u.size() != mse.size()) throw InvalidInput("fit_exp_quadratic: size mismatch");
    if (u.size() < 4) throw InvalidInput("fit_exp_quadratic: need at least 4 points");
    const auto n = static_cast<Eigen::Index>(u.size());
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double v = mse[static_cast<std::size_t>(k)];
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput("fit_exp_quadratic: mse values must be positive");
        const double x = u[static_cast<std::size_t>(k)];
        X(k, 0) = 1.0;
        X(k, 1) = x;
        X(k, 2) = x * x;
        y(k) = std::log(v);
    }
    const Eigen::Vector3d beta = X.colPivHouseholderQr().solve(y);
    ExpQuadFit fit;
    fit.c = std::exp(beta(0));
    fit.a = beta(1);
    fit.b = beta(2);
    const double mean = y.mean();
    const double ss_res = (y - X * beta).squaredNorm();
    const double ss_tot = (y.array() - mean).matrix().squaredNorm();
    const double scale = std::max(1.0, y.squaredNorm());
    if (ss_tot <= 1e-28 * scale)
        fit.r2 = ss_res <= 1e-24 * scale ? 1.0 : 0.0;
    else
        fit.r2 = 1.0 - ss_res / ss_tot;
    return fit;
}

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_linear: need ≥ 2 paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (sxx == 0.0) throw InvalidInput("fit_linear: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double ss_res = syy - f.slope * sxy;
    f.r2 = syy == 0.0 ? 1.0 : 1.0 - std::max(ss_res, 0.0) / syy;
    return f;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size();) {
        std::size_t e = k;
        while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
        const double avg = 0.5 * static_cast<double>(k + e) + 1.0;
        for (std::size_t j = k; j <= e; ++j) r[idx[j]] = avg;
        k = e + 1;
    }
    return r;
}

} // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidInput("spearman: need ≥ 2 paired points");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const double n = static_cast<double>(x.size());
    const double m = (n + 1.0) / 2.0;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < rx.size(); ++k) {
        sxy += (rx[k] - m) * (ry[k] - m);
        sxx += (rx[k] - m) * (rx[k] - m);
        syy += (ry[k] - m) * (ry[k] - m);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------

PredictionStats prediction_stats(const ansatz::Model& model, std::span<const data::CollisionSample> samples,
                                 train::TargetKind target) {
    if (samples.empty()) throw InvalidInput("prediction_stats: empty corpus");
    const auto n = static_cast<std::ptrdiff_t>(samples.size());
    std::vector<double> sq_pred(samples.size()), sq_base(samples.size()), sq_in(samples.size());
    std::vector<std::array<double, 3>> mom(samples.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto& s = samples[static_cast<std::size_t>(k)];
        const auto& in = target == train::TargetKind::NonlinearFromLin ? s.f_lin : s.f_str;
        const auto& tgt = target == train::TargetKind::NonlinearFromLin ? s.f_ref : s.f_lin;
        const auto pred = train::predict(model, s, target);
        double a = 0, b = 0, c = 0;
        for (int i = 0; i < kQ; ++i) {
            a += (pred[i] - tgt[i]) * (pred[i] - tgt[i]);
            b += (in[i] - tgt[i]) * (in[i] - tgt[i]);
            c += (pred[i] - in[i]) * (pred[i] - in[i]);
        }
        const auto mp = lbm::moments(pred);
        const auto mt = lbm::moments(tgt);
        const auto j = static_cast<std::size_t>(k);
        sq_pred[j] = a;
        sq_base[j] = b;
        sq_in[j] = c;
        mom[j] = {(mp.pxx_minus_pyy - mt.pxx_minus_pyy) * (mp.pxx_minus_pyy - mt.pxx_minus_pyy),
                  (mp.pxy - mt.pxy) * (mp.pxy - mt.pxy), (mp.energy - mt.energy) * (mp.energy - mt.energy)};
    }

    PredictionStats st;
    double sum_pred = 0, sum_base = 0, ratio_sum = 0;
    std::size_t ratio_n = 0;
    std::vector<double> per(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        sum_pred += sq_pred[k];
        sum_base += sq_base[k];
        st.mse_to_input += sq_in[k] / kQ;
        st.mse_pxx_pyy += mom[k][0];
        st.mse_pxy += mom[k][1];
        st.mse_energy += mom[k][2];
        per[k] = sq_pred[k] / kQ;
        if (sq_base[k] > 0.0) {
            ratio_sum += sq_pred[k] / sq_base[k];
            ++ratio_n;
        }
    }
    const double nd = static_cast<double>(samples.size());
    st.mse_pred = sum_pred / (nd * kQ);
    st.mse_base = sum_base / (nd * kQ);
    st.mse_to_input /= nd;
    st.mse_pxx_pyy /= nd;
    st.mse_pxy /= nd;
    st.mse_energy /= nd;
    st.eta = sum_base > 0.0 ? sum_pred / sum_base : std::numeric_limits<double>::quiet_NaN();
    st.eta_mean = ratio_n ? ratio_sum / static_cast<double>(ratio_n) : std::numeric_limits<double>::quiet_NaN();
    std::sort(per.begin(), per.end());
    st.mse_min = per.front();
    st.mse_max = per.back();
    st.mse_median = per.size() % 2 ? per[per.size() / 2] : 0.5 * (per[per.size() / 2 - 1] + per[per.size() / 2]);
    return st;
}

std::uint64_t corpus_hash(std::span<const data::CollisionSample> samples) {
    Fnv1a h;
    h.value(samples.size());
    for (const auto& s : samples) {
        h.value(s.f_str).value(s.f_lin).value(s.f_ref).value(s.rho).value(s.u.x).value(s.u.y).value(s.tau);
        h.value(static_cast<int>(s.source));
    }
    return h.digest();
}

std::uint64_t train_config_hash(const train::TrainConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << static_cast<int>(c.model) << '|' << c.layers << '|' << c.batch_size << '|' << c.learning_rate << '|'
       << c.epochs << '|' << c.seed << '|' << static_cast<int>(c.loss.kind) << '|' << c.loss.lambda << '|'
       << c.loss.lambda_u << '|' << static_cast<int>(c.loss.macro) << '|' << c.loss.nonunitary << '|'
       << static_cast<int>(c.loss.phase_weight) << '|' << static_cast<int>(c.target) << '|' << c.init_scale
       << '|' << c.validate_every << '|' << c.tau;
    return Fnv1a{}.str(os.str()).digest();
}

ansatz::Model ModelCache::get_or_train(const train::TrainConfig& config,
                                       std::span<const data::CollisionSample> samples,
                                       const train::Validator& validator) {
    std::filesystem::path stem;
    if (dir_) {
        const auto key = Fnv1a{}.value(corpus_hash(samples)).value(train_config_hash(config)).digest();
        stem = *dir_ / ("model_" + hex64(key));
        if (std::filesystem::exists(stem.string() + ".json")) {
            spdlog::info("using cached model {}", stem.string());
            return ansatz::load_model(stem);
        }
    }
    auto result = train::train(config, samples, validator);
    if (dir_) ansatz::save_model(result.best, stem);
    return result.best;
}

std::vector<VelocityRow> velocity_sweep(const train::TrainConfig& base, std::span<const double> u_list,
                                        const DatasetProvider& dataset, ModelCache& cache) {
    std::vector<VelocityRow> rows;
    for (double u : u_list) {
        const auto samples = dataset(u, base.tau);
        const auto model = cache.get_or_train(base, samples);
        rows.push_back({u, prediction_stats(model, samples, base.target)});
        spdlog::info("velocity sweep u={} mse={:.3e} base={:.3e}", u, rows.back().stats.mse_pred,
                     rows.back().stats.mse_base);
    }
    return rows;
}

std::vector<TauRow> tau_sweep(const train::TrainConfig& base, std::span<const double> taus, double u,
                              const DatasetProvider& dataset, const train::Validator& validator,
                              ModelCache& cache) {
    std::vector<TauRow> rows;
    for (double tau : taus) {
        train::TrainConfig cfg = base;
        cfg.tau = tau;
        const auto samples = dataset(u, tau);
        const auto model = cache.get_or_train(cfg, samples);
        TauRow row;
        row.tau = tau;
        row.nu = kD2Q9.cs2 * (tau - 0.5);
        row.stats = prediction_stats(model, samples, cfg.target);
        if (validator) row.vel_err = validator(model);
        row.omega_nonunitarity = nonunitarity(build_frozen_map({u, 0.0}, tau, MapKind::EffectiveNonlinearOmega)).metric;
        rows.push_back(row);
        spdlog::info("tau sweep tau={} mse={:.3e} vel_err={:.4f}", tau, row.stats.mse_pred, row.vel_err);
    }
    return rows;
}

std::vector<LambdaRow> lambda_u_sweep(const train::TrainConfig& base, std::span<const double> lambdas,
                                      std::span<const data::CollisionSample> samples,
                                      const train::Validator& validator, ModelCache& cache) {
    std::vector<LambdaRow> rows;
    for (double lam : lambdas) {
        train::TrainConfig cfg = base;
        cfg.loss.lambda_u = lam;
        const auto model = cache.get_or_train(cfg, samples);
        LambdaRow row;
        row.lambda_u = lam;
        row.stats = prediction_stats(model, samples, cfg.target);
        if (validator) row.vel_err = validator(model);
        rows.push_back(row);
        spdlog::info("lambda_u sweep {} mse={:.3e} vel_err={:.4f}", lam, row.stats.mse_pred, row.vel_err);
    }
    return rows;
}

std::vector<SpectrumRow> spectrum_sweep(MapKind kind, std::span<const double> u_list, std::span<const double> taus,
                                        lbm::Velocity direction) {
    const double norm = std::hypot(direction.x, direction.y);
    if (!(norm > 0.0)) throw ConfigError("spectrum sweep: zero direction");
    std::vector<SpectrumRow> rows;
    for (double tau : taus) {
        for (double u : u_list) {
            const lbm::Velocity v{u * direction.x / norm, u * direction.y / norm};
            rows.push_back({u, tau, nonunitarity(build_frozen_map(v, tau, kind))});
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.precision(12);
    return os;
}

// Missing values (0/0 ratios) are written as empty cells.
std::string num(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

void stats_header(std::ostream& os) {
    os << "mse_pred,mse_base,eta,eta_mean,mse_max,mse_median,mse_min,mse_to_input,mse_pxx_pyy,mse_pxy,mse_energy";
}

void stats_row(std::ostream& os, const PredictionStats& s) {
    os << num(s.mse_pred) << ',' << num(s.mse_base) << ',' << num(s.eta) << ',' << num(s.eta_mean) << ','
       << num(s.mse_max) << ',' << num(s.mse_median) << ',' << num(s.mse_min) << ',' << num(s.mse_to_input) << ','
       << num(s.mse_pxx_pyy) << ',' << num(s.mse_pxy) << ',' << num(s.mse_energy);
}

} // namespace

void write_velocity_csv(const std::filesystem::path& path, std::span<const VelocityRow> rows) {
    auto os = open_csv(path);
    os << "u,";
    stats_header(os);
    os << '\n';
    for (const auto& r : rows) {
        os << num(r.u) << ',';
        stats_row(os, r.stats);
        os << '\n';
    }
}

void write_tau_csv(const std::filesystem::path& path, std::span<const TauRow> rows) {
    auto os = open_csv(path);
    os << "tau,nu,";
    stats_header(os);
    os << ",vel_err,omega_nonunitarity\n";
    for (const auto& r : rows) {
        os << num(r.tau) << ',' << num(r.nu) << ',';
        stats_row(os, r.stats);
        os << ',' << num(r.vel_err) << ',' << num(r.omega_nonunitarity) << '\n';
    }
}

void write_lambda_csv(const std::filesystem::path& path, std::span<const LambdaRow> rows) {
    auto os = open_csv(path);
    os << "lambda_u,";
    stats_header(os);
    os << ",vel_err\n";
    for (const auto& r : rows) {
        os << num(r.lambda_u) << ',';
        stats_row(os, r.stats);
        os << ',' << num(r.vel_err) << '\n';
    }
}

void write_spectrum_csv(const std::filesystem::path& path, std::span<const SpectrumRow> rows) {
    auto os = open_csv(path);
    os << "u,tau,metric,sigma_max";
    for (int k = 0; k < 9; ++k) os << ",sigma" << k;
    os << '\n';
    for (const auto& r : rows) {
        os << num(r.u) << ',' << num(r.tau) << ',' << num(r.nu.metric) << ',' << num(r.nu.sigma_max);
        for (double s : r.nu.sigmas) os << ',' << num(s);
        os << '\n';
    }
}

} // namespace qlbm::analysis
