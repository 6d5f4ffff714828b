#pragma once

// D2Q9 BGK lattice Boltzmann reference solver.
//
// Channel numbering:
//   0:(0,0)  1:(1,0)  2:(0,1)  3:(-1,0)  4:(0,-1)
//   5:(1,1)  6:(-1,1) 7:(-1,-1) 8:(1,-1)
// Populations are stored structure-of-arrays: one contiguous nx*ny plane per
// channel, y fastest.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace qlbm::lbm {

inline constexpr int kQ = 9;
using Populations = std::array<double, kQ>;

struct LatticeConstants {
    std::array<int, kQ> cx;
    std::array<int, kQ> cy;
    std::array<double, kQ> w;
    std::array<int, kQ> opposite;
    double cs2;
};

inline constexpr LatticeConstants kD2Q9{
    {0, 1, 0, -1, 0, 1, -1, -1, 1},
    {0, 0, 1, 0, -1, 1, 1, -1, -1},
    {4.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0, 1.0 / 36.0, 1.0 / 36.0, 1.0 / 36.0,
     1.0 / 36.0},
    {0, 3, 4, 1, 2, 7, 8, 5, 6},
    1.0 / 3.0,
};

enum class EqOrder { Linear, Quadratic };
enum class Boundary { Periodic, InletOutletWithMask };
enum class FlowCase { TGV, Kolmogorov, Plate, Jets };

struct Velocity {
    double x = 0.0;
    double y = 0.0;
};

struct Macroscopic {
    double rho = 0.0;
    Velocity u;
};

/// Signed channel sums: momentum, stress differences and energy.
struct MacroVector {
    double ux = 0.0;
    double uy = 0.0;
    double pxx_minus_pyy = 0.0;
    double pxy = 0.0;
    double energy = 0.0;

    std::array<double, 5> as_array() const { return {ux, uy, pxx_minus_pyy, pxy, energy}; }
};

/// w_i ρ (1 + u·c_i/cs² [+ (u·c_i)²/(2cs⁴) − u·u/(2cs²)]).
Populations equilibrium(double rho, Velocity u, EqOrder order);

/// Density and velocity (momentum / ρ). Throws DegenerateDensity for ρ ≤ 0.
Macroscopic macroscopic(const Populations& f);

MacroVector moments(const Populations& f);

/// f + (f_eq(ρ(f), u(f)) − f) / τ.
Populations bgk_collide(const Populations& f, double tau, EqOrder order);

// ---------------------------------------------------------------------------
// Forcing and case parameters

struct UniformForce {
    double gx = 0.0;
    double gy = 0.0;
};

/// Counter-propagating Gaussian jets; centre lines are fractions of the domain.
struct GaussianJets {
    double amplitude = 4e-4;
    double width = 10.0;
    double y_h1 = 1.0 / 3.0;
    double y_h2 = 2.0 / 3.0;
    double x_v1 = 1.0 / 3.0;
    double x_v2 = 2.0 / 3.0;
};

/// Initial shear field of the decaying Kolmogorov flow. Not a body force.
struct KolmogorovInit {
    double ax = 0.18;
    double ay = 0.09;
    double kx = 1.0;
    double ky = 1.0;
};

using ForceSpec = std::variant<std::monostate, UniformForce, GaussianJets, KolmogorovInit>;

/// Flat plate normal to the +x inflow.
struct PlateSpec {
    double x_frac = 0.25;        ///< plate column as a fraction of nx
    double center_frac = 0.5;    ///< plate centre as a fraction of ny
    double length_frac = 0.39;   ///< plate span as a fraction of ny
    double inlet_u = 0.025;
};

struct LatticeConfig {
    int nx = 64;
    int ny = 64;
    double tau = 1.0;
    EqOrder order = EqOrder::Quadratic;
    Boundary boundary = Boundary::Periodic;
    ForceSpec force;
    FlowCase flow = FlowCase::TGV;
    double u_max = 0.05;  ///< TGV peak velocity
    PlateSpec plate;

    /// Throws ConfigError when the invariants (nx,ny ≥ 4, τ > 0.5, ...) fail.
    void validate() const;
    double viscosity() const { return kD2Q9.cs2 * (tau - 0.5); }
};

/// Body force G(x, y) at a site; zero unless the variant holds a real force.
Velocity force_at(const ForceSpec& spec, int x, int y, int nx, int ny);

// ---------------------------------------------------------------------------
// Fields

template <typename T> class BasicField {
  public:
    BasicField() = default;
    BasicField(int nx, int ny, T fill = T{})
        : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(kQ) * nx * ny, fill) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t sites() const { return static_cast<std::size_t>(nx_) * ny_; }

    T& at(int i, int x, int y) { return data_[index(i, x, y)]; }
    const T& at(int i, int x, int y) const { return data_[index(i, x, y)]; }

    std::span<T> channel(int i) { return {data_.data() + i * sites(), sites()}; }
    std::span<const T> channel(int i) const { return {data_.data() + i * sites(), sites()}; }

    std::array<T, kQ> site(int x, int y) const {
        std::array<T, kQ> out;
        for (int i = 0; i < kQ; ++i) out[i] = at(i, x, y);
        return out;
    }
    void set_site(int x, int y, const std::array<T, kQ>& v) {
        for (int i = 0; i < kQ; ++i) at(i, x, y) = v[i];
    }

    std::span<T> raw() { return data_; }
    std::span<const T> raw() const { return data_; }

    bool operator==(const BasicField&) const = default;

  private:
    std::size_t index(int i, int x, int y) const {
        return (static_cast<std::size_t>(i) * nx_ + x) * ny_ + y;
    }

    int nx_ = 0;
    int ny_ = 0;
    std::vector<T> data_;
};

using DistributionField = BasicField<double>;

/// Solid-site indicator for bounce-back obstacles.
class SolidMask {
  public:
    SolidMask() = default;
    SolidMask(int nx, int ny) : nx_(nx), ny_(ny), solid_(static_cast<std::size_t>(nx) * ny, 0) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    bool empty() const { return solid_count() == 0; }
    bool is_solid(int x, int y) const {
        return !solid_.empty() && solid_[static_cast<std::size_t>(x) * ny_ + y] != 0;
    }
    void set_solid(int x, int y, bool v = true) {
        solid_[static_cast<std::size_t>(x) * ny_ + y] = v ? 1 : 0;
    }
    std::size_t solid_count() const;
    std::size_t fluid_count() const { return static_cast<std::size_t>(nx_) * ny_ - solid_count(); }

  private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<std::uint8_t> solid_;
};

/// Plate geometry of the configuration; an all-fluid mask for periodic runs.
SolidMask build_mask(const LatticeConfig& config);

// ---------------------------------------------------------------------------
// Field operations

/// Periodic translation of channel i by c_i.
template <typename T> BasicField<T> stream(const BasicField<T>& field) {
    BasicField<T> out(field.nx(), field.ny());
    const int nx = field.nx();
    const int ny = field.ny();
    for (int i = 0; i < kQ; ++i) {
        const int cx = kD2Q9.cx[i];
        const int cy = kD2Q9.cy[i];
        for (int x = 0; x < nx; ++x) {
            const int xd = (x + cx + nx) % nx;
            for (int y = 0; y < ny; ++y) {
                out.at(i, xd, (y + cy + ny) % ny) = field.at(i, x, y);
            }
        }
    }
    return out;
}

/// Reflects populations that streamed into solid sites back to the fluid site
/// they left, in the opposite channel, and empties the solid sites.
template <typename T> void apply_bounce_back(BasicField<T>& field, const SolidMask& mask) {
    if (mask.empty()) return;
    const int nx = field.nx();
    const int ny = field.ny();
    for (int x = 0; x < nx; ++x) {
        for (int y = 0; y < ny; ++y) {
            if (!mask.is_solid(x, y)) continue;
            for (int i = 1; i < kQ; ++i) {
                const int xs = (x - kD2Q9.cx[i] + nx) % nx;
                const int ys = (y - kD2Q9.cy[i] + ny) % ny;
                if (!mask.is_solid(xs, ys)) field.at(kD2Q9.opposite[i], xs, ys) = field.at(i, x, y);
            }
            for (int i = 0; i < kQ; ++i) field.at(i, x, y) = T{};
        }
    }
}

/// Value-returning bounce-back; throws ConfigError when every site is solid.
DistributionField bounce_back(DistributionField field, const SolidMask& mask);

/// Post-collision forcing f_i += w_i (c_i·G)/cs² at every fluid site.
void apply_force(DistributionField& field, const ForceSpec& spec, double scale = 1.0,
                 const SolidMask* mask = nullptr);

/// Collides every fluid site in place.
void collide(DistributionField& field, double tau, EqOrder order, const SolidMask* mask = nullptr);

/// Equilibrium inflow at x = 0 and zeroth-order extrapolation at x = nx-1.
void apply_inlet_outlet(DistributionField& field, double inlet_u);

/// Initial field of a flow case (TGV vortex, Kolmogorov shear, plate or jets at rest).
DistributionField init_case(FlowCase flow, const LatticeConfig& config);
inline DistributionField init_case(const LatticeConfig& config) { return init_case(config.flow, config); }

/// Analytic TGV velocity at a cell-centred site.
Velocity tgv_velocity(const LatticeConfig& config, int x, int y);

double total_mass(const DistributionField& field);

/// Collide-force-stream-boundaries driver for one configuration.
class Solver {
  public:
    explicit Solver(LatticeConfig config);

    const LatticeConfig& config() const { return config_; }
    const SolidMask& mask() const { return mask_; }

    /// One full time step; the collision order defaults to the configured one.
    void step(DistributionField& field, double force_scale = 1.0) const;
    void step(DistributionField& field, EqOrder order, double force_scale) const;

    /// Streaming plus bounce-back and open boundaries.
    template <typename T> BasicField<T> propagate(const BasicField<T>& field) const {
        BasicField<T> out = stream(field);
        apply_bounce_back(out, mask_);
        return out;
    }

  private:
    LatticeConfig config_;
    SolidMask mask_;
};

// ---------------------------------------------------------------------------
// Trajectories

struct MacroField {
    int nx = 0;
    int ny = 0;
    std::vector<double> rho;
    std::vector<double> ux;
    std::vector<double> uy;

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(x) * ny + y; }
    double speed(int x, int y) const;

    /// Solid (empty) sites are reported with ρ = 0, u = 0.
    static MacroField from(const DistributionField& field);
};

enum class SnapshotMode { FullFields, MacroOnly };

struct Trajectory {
    SnapshotMode mode = SnapshotMode::FullFields;
    int steps = 0;
    std::vector<DistributionField> fields;  ///< fields[t] is the state after t steps
    std::vector<MacroField> macros;
};

/// Runs `steps` steps from `initial`; throws InstabilityError on NaN.
Trajectory run_reference(const LatticeConfig& config, const DistributionField& initial, int steps,
                         SnapshotMode mode = SnapshotMode::FullFields);
Trajectory run_reference(const LatticeConfig& config, int steps,
                         SnapshotMode mode = SnapshotMode::FullFields);

/// Throws InstabilityError when a NaN/inf is present; warns once per call on
/// negative populations. Returns the number of negative entries.
std::size_t check_field(const DistributionField& field, int step);

} // namespace qlbm::lbm
