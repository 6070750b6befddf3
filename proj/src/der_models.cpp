#include "pcsindy/der_models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pcsindy/errors.hpp"

namespace pcsindy {

namespace {

void require_positive(double v, const char* what, int bus) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(std::string(what) + " of DER at bus " + std::to_string(bus) +
                      " must be positive and finite");
}

}  // namespace

void GfmParams::validate() const {
  require_positive(omega_c, "omega_c", bus_id);
  require_positive(k_dp, "k_dp", bus_id);
  if (!std::isfinite(p_set)) throw ConfigError("p_set of GFM at bus " + std::to_string(bus_id) + " is not finite");
}

void GflParams::validate() const {
  if (!(k_p >= 0.0) || !std::isfinite(k_p))
    throw ConfigError("k_p of DER at bus " + std::to_string(bus_id) + " must be non-negative and finite");
  require_positive(k_i, "k_i", bus_id);
  require_positive(omega_c, "omega_c", bus_id);
  require_positive(zeta, "zeta", bus_id);
}

GfmRates gfm_derivative(const GfmState& x, double p, double p_set, const GfmParams& par,
                        const SystemConstants& sys) {
  const double w0 = sys.omega0();
  return {x.omega - w0, -par.omega_c * (x.omega - w0) - par.omega_c * par.k_dp * (p - p_set)};
}

GflRates gfl_derivative(const GflState& x, double vq, const GflParams& par,
                        const SystemConstants& sys) {
  const double w_pll = par.k_p * vq + par.k_i * x.vq_int;
  const double wc2 = par.omega_c * par.omega_c;
  GflRates r;
  r.theta_dot = w_pll - sys.omega0();
  r.omega_dot = x.omega_dot;
  r.omega_ddot = -2.0 * par.zeta * par.omega_c * x.omega_dot + wc2 * (w_pll - x.omega);
  r.vq_int_dot = vq;
  r.omega_pll = w_pll;
  return r;
}

double gfm_steady_omega(double p, double p_set, const GfmParams& par, const SystemConstants& sys) {
  return sys.omega0() - par.k_dp * (p - p_set);
}

Eigen::MatrixXd analytical_xi_gfm(const GfmParams& par) {
  const double wc = par.omega_c;
  Eigen::MatrixXd xi(4, 2);
  xi << 1.0, -wc,
       -1.0, wc,
        0.0, -wc * par.k_dp,
        0.0, wc * par.k_dp;
  return xi;
}

Eigen::MatrixXd analytical_xi_gfl(const GflParams& par) {
  const double wc = par.omega_c;
  const double wc2 = wc * wc;
  Eigen::MatrixXd xi(5, 3);
  xi << 0.0, 0.0, -wc2,
       -1.0, 0.0, 0.0,
        0.0, 1.0, -2.0 * par.zeta * wc,
        par.k_p, 0.0, wc2 * par.k_p,
        par.k_i, 0.0, wc2 * par.k_i;
  return xi;
}

Eigen::MatrixXd assemble_xi(std::span<const Eigen::MatrixXd> blocks) {
  if (blocks.empty()) throw ConfigError("no DERs");
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    xi.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return xi;
}

DerKind kind_of(const DerParams& d) {
  return std::holds_alternative<GfmParams>(d) ? DerKind::Gfm : DerKind::Gfl;
}

int bus_of(const DerParams& d) {
  return std::visit([](const auto& p) { return p.bus_id; }, d);
}

std::vector<DerParams> sort_by_bus(std::vector<DerParams> ders) {
  std::stable_sort(ders.begin(), ders.end(),
                   [](const DerParams& a, const DerParams& b) { return bus_of(a) < bus_of(b); });
  std::set<int> seen;
  for (const auto& d : ders)
    if (!seen.insert(bus_of(d)).second)
      throw ConfigError("two DERs at bus " + std::to_string(bus_of(d)));
  return ders;
}

std::vector<DerDescriptor> make_roster(std::span<const DerParams> sorted_ders) {
  std::vector<DerDescriptor> roster;
  int ordinal = 0;
  for (const auto& d : sorted_ders) {
    ++ordinal;
    const DerKind k = kind_of(d);
    roster.push_back({(k == DerKind::Gfm ? "gfm" : "gfl") + std::to_string(ordinal), k, bus_of(d)});
  }
  return roster;
}

DerDescriptor parse_der_label(const std::string& label) {
  if (label.size() < 4 || (label.compare(0, 3, "gfm") != 0 && label.compare(0, 3, "gfl") != 0) ||
      !std::all_of(label.begin() + 3, label.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw ConfigError("'" + label + "' is not a DER label");
  return {label, label[2] == 'm' ? DerKind::Gfm : DerKind::Gfl, -1};
}

Eigen::MatrixXd analytical_xi(std::span<const DerParams> sorted_ders) {
  std::vector<Eigen::MatrixXd> blocks;
  for (const auto& d : sorted_ders) {
    if (const auto* g = std::get_if<GfmParams>(&d))
      blocks.push_back(analytical_xi_gfm(*g));
    else
      blocks.push_back(analytical_xi_gfl(std::get<GflParams>(d)));
  }
  return assemble_xi(blocks);
}

const std::vector<std::string>& state_names(DerKind kind) {
  static const std::vector<std::string> gfm{"theta", "omega"};
  static const std::vector<std::string> gfl{"theta", "omega", "omega_dot"};
  return kind == DerKind::Gfm ? gfm : gfl;
}

const std::vector<std::string>& target_names(DerKind kind) {
  static const std::vector<std::string> gfm{"theta_dot", "omega_dot"};
  static const std::vector<std::string> gfl{"theta_dot", "omega_dot", "omega_ddot"};
  return kind == DerKind::Gfm ? gfm : gfl;
}

std::string integrated_state_of(const std::string& target) {
  if (target == "theta_dot") return "theta";
  if (target == "omega_dot") return "omega";
  if (target == "omega_ddot") return "omega_dot";
  throw ConfigError("'" + target + "' is not a derivative target");
}

}  // namespace pcsindy
