#include "qlbm/dataset.hpp"

#include "qlbm/errors.hpp"
#include "qlbm/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace qlbm::data {

using lbm::EqOrder;
using lbm::kQ;

void ArtificialSpec::validate() const {
    if (!(u0_max >= 0.0) || !(u0_max < std::sqrt(lbm::kD2Q9.cs2)))
        throw ConfigError("artificial spec: u0_max must lie in [0, c_s)");
    for (int i = 0; i < kQ; ++i) {
        if (!(sigma_min[i] >= 0.0) || !(sigma_min[i] <= sigma_max[i]))
            throw ConfigError("artificial spec: need 0 <= sigma_min <= sigma_max per channel");
    }
    if (!(tau > 0.5)) throw ConfigError("artificial spec: tau must exceed 0.5");
    if (max_retries < 1) throw ConfigError("artificial spec: max_retries must be positive");
}

CollisionSample make_sample(const Populations& f_str, double tau, Source source) {
    CollisionSample s;
    s.f_str = f_str;
    s.f_lin = lbm::bgk_collide(f_str, tau, EqOrder::Linear);
    s.f_ref = lbm::bgk_collide(f_str, tau, EqOrder::Quadratic);
    const auto m = lbm::macroscopic(f_str);
    s.rho = m.rho;
    s.u = m.u;
    s.tau = tau;
    s.source = source;
    return s;
}

std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t k) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    return std::mt19937_64(seq);
}

CollisionSample sample_artificial(const ArtificialSpec& spec, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
        Velocity u;
        if (spec.correlation == Correlation::TGVAngle) {
            const double ux0 = spec.u0_max * unit(rng);
            const double uy0 = spec.u0_max * unit(rng);
            const double theta = std::numbers::pi * (2.0 * unit(rng) - 1.0);
            u = {ux0 * std::cos(theta), uy0 * std::sin(theta)};
        } else {
            u = {spec.u0_max * (2.0 * unit(rng) - 1.0), spec.u0_max * (2.0 * unit(rng) - 1.0)};
        }
        const Populations feq = lbm::equilibrium(1.0, u, EqOrder::Quadratic);

        Populations neq{};
        for (int i = 0; i < kQ; ++i) {
            const double sigma = spec.sigma_min[i] + (spec.sigma_max[i] - spec.sigma_min[i]) * unit(rng);
            neq[i] = sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0;
        }
        if (spec.project_neq) {
            // 1, cx, cy are mutually orthogonal with squared norms 9, 6, 6.
            double m = 0.0, jx = 0.0, jy = 0.0;
            for (int i = 0; i < kQ; ++i) {
                m += neq[i];
                jx += neq[i] * lbm::kD2Q9.cx[i];
                jy += neq[i] * lbm::kD2Q9.cy[i];
            }
            for (int i = 0; i < kQ; ++i)
                neq[i] -= m / 9.0 + jx / 6.0 * lbm::kD2Q9.cx[i] + jy / 6.0 * lbm::kD2Q9.cy[i];
        }

        Populations f{};
        bool positive = true;
        for (int i = 0; i < kQ; ++i) {
            f[i] = feq[i] + neq[i];
            positive = positive && f[i] > 0.0;
        }
        if (positive) return make_sample(f, spec.tau, Source::Artificial);
    }
    throw NumericalError("artificial sampler: no positive draw after " +
                         std::to_string(spec.max_retries) + " attempts");
}

std::vector<CollisionSample> generate_artificial(const ArtificialSpec& spec) {
    spec.validate();
    std::vector<CollisionSample> out(spec.n);
    const auto n = static_cast<std::int64_t>(spec.n);
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < n; ++k) {
        try {
            auto rng = sample_rng(spec.seed, static_cast<std::uint64_t>(k));
            out[static_cast<std::size_t>(k)] = sample_artificial(spec, rng);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<CollisionSample> harvest(const lbm::Trajectory& trajectory, double tau,
                                     const lbm::SolidMask* mask) {
    if (trajectory.mode != lbm::SnapshotMode::FullFields)
        throw ConfigError("harvest needs a trajectory with full field snapshots");
    std::vector<CollisionSample> out;
    if (trajectory.fields.size() < 2) return out;
    const auto& first = trajectory.fields.front();
    const std::size_t fluid = mask && !mask->empty() ? mask->fluid_count() : first.sites();
    out.reserve(fluid * (trajectory.fields.size() - 1));
    for (std::size_t t = 1; t < trajectory.fields.size(); ++t) {
        const auto& field = trajectory.fields[t];
        for (int x = 0; x < field.nx(); ++x) {
            for (int y = 0; y < field.ny(); ++y) {
                if (mask && mask->is_solid(x, y)) continue;
                out.push_back(make_sample(field.site(x, y), tau, Source::Harvested));
            }
        }
    }
    return out;
}

std::vector<CollisionSample> stratify_by_speed(std::span<const CollisionSample> samples, int bins,
                                               double u_lo, double u_hi, std::uint64_t seed) {
    if (bins < 1 || !(u_lo > 0.0) || !(u_hi > u_lo))
        throw ConfigError("stratify_by_speed: need bins >= 1 and 0 < u_lo < u_hi");
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(bins));
    const double llo = std::log(u_lo);
    const double span = std::log(u_hi) - llo;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const double s = std::hypot(samples[k].u.x, samples[k].u.y);
        if (s < u_lo || s >= u_hi) continue;
        const int b = std::min(bins - 1, static_cast<int>((std::log(s) - llo) / span * bins));
        members[static_cast<std::size_t>(b)].push_back(k);
    }
    std::size_t per_bin = samples.size();
    for (const auto& m : members)
        if (!m.empty()) per_bin = std::min(per_bin, m.size());
    std::mt19937_64 rng(seed);
    std::vector<CollisionSample> out;
    for (auto& m : members) {
        if (m.empty()) continue;
        std::shuffle(m.begin(), m.end(), rng);
        for (std::size_t j = 0; j < per_bin; ++j) out.push_back(samples[m[j]]);
    }
    return out;
}

DatasetReport stats(std::span<const CollisionSample> samples, int bins) {
    if (samples.empty()) throw InvalidInput("stats: empty dataset");
    if (bins < 1) throw InvalidInput("stats: bins must be positive");
    DatasetReport r;
    r.count = samples.size();
    const double n = static_cast<double>(samples.size());

    std::vector<Populations> neq(samples.size());
    std::vector<double> speed(samples.size());
    Populations lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    r.ux_min = r.uy_min = std::numeric_limits<double>::infinity();
    r.ux_max = r.uy_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        const Populations feq = lbm::equilibrium(s.rho, s.u, EqOrder::Quadratic);
        for (int i = 0; i < kQ; ++i) {
            neq[k][i] = s.f_str[i] - feq[i];
            lo[i] = std::min(lo[i], neq[k][i]);
            hi[i] = std::max(hi[i], neq[k][i]);
            r.neq_mean[i] += neq[k][i] / n;
        }
        r.ux_min = std::min(r.ux_min, s.u.x);
        r.ux_max = std::max(r.ux_max, s.u.x);
        r.uy_min = std::min(r.uy_min, s.u.y);
        r.uy_max = std::max(r.uy_max, s.u.y);
        r.ux_mean += s.u.x / n;
        r.uy_mean += s.u.y / n;
        speed[k] = std::hypot(s.u.x, s.u.y);
    }
    for (int i = 0; i < kQ; ++i) {
        double var = 0.0;
        for (const auto& v : neq) var += (v[i] - r.neq_mean[i]) * (v[i] - r.neq_mean[i]);
        r.neq_std[i] = std::sqrt(var / n);

        Histogram& h = r.neq_hist[i];
        h.lo = lo[i];
        h.hi = hi[i];
        h.counts.assign(static_cast<std::size_t>(bins), 0);
        const double width = (h.hi - h.lo) / bins;
        for (const auto& v : neq) {
            int b = width > 0.0 ? static_cast<int>((v[i] - h.lo) / width) : 0;
            b = std::clamp(b, 0, bins - 1);
            ++h.counts[static_cast<std::size_t>(b)];
        }
    }

    std::sort(speed.begin(), speed.end());
    r.speed_quantile_levels = {0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};
    for (double q : r.speed_quantile_levels) {
        const double pos = q * static_cast<double>(speed.size() - 1);
        const auto i0 = static_cast<std::size_t>(std::floor(pos));
        const auto i1 = std::min(speed.size() - 1, i0 + 1);
        r.speed_quantiles.push_back(speed[i0] + (pos - static_cast<double>(i0)) * (speed[i1] - speed[i0]));
    }
    return r;
}

std::vector<std::filesystem::path> write_report(const DatasetReport& report,
                                                std::span<const CollisionSample> samples,
                                                const std::filesystem::path& dir,
                                                const std::string& stem) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;

    const auto hist_path = dir / (stem + "_neq_hist.csv");
    {
        std::ofstream os(hist_path);
        os.precision(12);
        os << "channel,bin,lo,hi,count\n";
        for (int i = 0; i < kQ; ++i) {
            const auto& h = report.neq_hist[i];
            const double width = h.counts.empty() ? 0.0 : (h.hi - h.lo) / h.counts.size();
            for (std::size_t b = 0; b < h.counts.size(); ++b)
                os << i << ',' << b << ',' << h.lo + b * width << ',' << h.lo + (b + 1) * width << ','
                   << h.counts[b] << '\n';
        }
    }
    written.push_back(hist_path);

    const auto summary_path = dir / (stem + "_summary.csv");
    {
        std::ofstream os(summary_path);
        os.precision(12);
        os << "quantity,value\n";
        os << "count," << report.count << '\n';
        for (int i = 0; i < kQ; ++i) {
            os << "neq_mean_" << i << ',' << report.neq_mean[i] << '\n';
            os << "neq_std_" << i << ',' << report.neq_std[i] << '\n';
        }
        os << "ux_min," << report.ux_min << "\nux_max," << report.ux_max << '\n';
        os << "uy_min," << report.uy_min << "\nuy_max," << report.uy_max << '\n';
        os << "ux_mean," << report.ux_mean << "\nuy_mean," << report.uy_mean << '\n';
        for (std::size_t q = 0; q < report.speed_quantiles.size(); ++q)
            os << "speed_q" << report.speed_quantile_levels[q] << ',' << report.speed_quantiles[q] << '\n';
    }
    written.push_back(summary_path);

    const auto vel_path = dir / (stem + "_velocity.csv");
    {
        std::ofstream os(vel_path);
        os.precision(12);
        os << "ux,uy\n";
        // Scatter export is capped so that 2e5-sample corpora stay plottable.
        const std::size_t stride = std::max<std::size_t>(1, samples.size() / 20000);
        for (std::size_t k = 0; k < samples.size(); k += stride)
            os << samples[k].u.x << ',' << samples[k].u.y << '\n';
    }
    written.push_back(vel_path);
    return written;
}

std::vector<std::vector<std::size_t>> shuffle_batches(std::size_t n, std::size_t batch_size,
                                                      std::uint64_t seed) {
    if (batch_size == 0) throw InvalidInput("shuffle_batches: batch_size must be >= 1");
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

namespace {

void pack(const CollisionSample& s, double* r) {
    for (int i = 0; i < kQ; ++i) {
        r[i] = s.f_str[i];
        r[kQ + i] = s.f_lin[i];
        r[2 * kQ + i] = s.f_ref[i];
    }
    r[27] = s.rho;
    r[28] = s.u.x;
    r[29] = s.u.y;
    r[30] = s.tau;
    r[31] = static_cast<double>(static_cast<int>(s.source));
}

CollisionSample unpack(const double* r) {
    CollisionSample s;
    for (int i = 0; i < kQ; ++i) {
        s.f_str[i] = r[i];
        s.f_lin[i] = r[kQ + i];
        s.f_ref[i] = r[2 * kQ + i];
    }
    s.rho = r[27];
    s.u = {r[28], r[29]};
    s.tau = r[30];
    s.source = r[31] == 1.0 ? Source::Artificial : Source::Harvested;
    return s;
}

} // namespace

void write_dataset(const std::filesystem::path& path, std::span<const CollisionSample> samples) {
    std::vector<double> payload(samples.size() * kRecordWidth);
    for (std::size_t k = 0; k < samples.size(); ++k) pack(samples[k], payload.data() + k * kRecordWidth);
    io::ContainerHeader h;
    h.kind = io::PayloadKind::Dataset;
    h.nx = static_cast<std::uint32_t>(samples.size());
    h.ny = kRecordWidth;
    io::write_container(path, h, payload);
}

std::vector<CollisionSample> read_dataset(const std::filesystem::path& path) {
    io::ContainerHeader h;
    const auto payload = io::read_container(path, h);
    if (h.kind != io::PayloadKind::Dataset || h.ny != kRecordWidth)
        throw std::runtime_error(path.string() + ": not a dataset file");
    std::vector<CollisionSample> out(h.nx);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = unpack(payload.data() + k * kRecordWidth);
    return out;
}

void write_dataset_csv(const std::filesystem::path& path, std::span<const CollisionSample> samples) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    os.precision(17);
    for (const char* prefix : {"str", "lin", "ref"})
        for (int i = 0; i < kQ; ++i) os << "f" << prefix << i << ',';
    os << "rho,ux,uy,tau,source\n";
    double r[kRecordWidth];
    for (const auto& s : samples) {
        pack(s, r);
        for (int j = 0; j < kRecordWidth; ++j) os << r[j] << (j + 1 < kRecordWidth ? ',' : '\n');
    }
}

} // namespace qlbm::data
