#include "hybridsde/model.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "hybridsde/errors.hpp"

namespace hybridsde {

QRow q_row(const ModelSpec& model, std::span<const double> x, int k) {
  QRow row;
  row.rates.assign(static_cast<std::size_t>(model.regime_cap) + 1, 0.0);
  KahanSum total;
  for (int l = 1; l <= model.regime_cap; ++l) {
    if (l == k) continue;
    const double r = model.q_provider ? model.q_provider(x, k, l) : 0.0;
    if (!std::isfinite(r)) {
      throw NonFiniteRate("q_provider(" + std::to_string(k) + "," +
                          std::to_string(l) + ") is not finite");
    }
    if (r < 0.0) {
      throw NegativeRate("q_provider(" + std::to_string(k) + "," +
                         std::to_string(l) + ") < 0");
    }
    row.rates[static_cast<std::size_t>(l)] = r;
    total.add(r);
  }
  row.total = total.value();
  return row;
}

LevyDecomposition levy_decompose(const LevyMeasureSpec& levy, double eps) {
  LevyDecomposition out;
  out.retained = levy.has_jumps() ? levy.with_cutoff(eps) : LevyMeasureSpec{};
  out.cp_intensity = out.retained.cp_intensity();
  out.note =
      "large jumps (|u| > eps) compound Poisson; small jumps dropped; "
      "compensation of the retained part applied exactly as drift correction; "
      "residual bias is of the order of the dropped small-jump variance";
  return out;
}

namespace {

double example1_gate(std::span<const double> x) {
  const double r2 = dot(x, x);
  return r2 / (1.0 + r2);
}

std::function<double(int)> identity_weight() {
  return [](int l) { return static_cast<double>(l); };
}

std::function<double(double)> unit_zeta() {
  return [](double) { return 1.0; };
}

}  // namespace

ModelSpec example1_model(double alpha, int M, double eps,
                         bool reflect_tail_to_cap) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("example1: alpha must be in (0,2)");
  if (M < 2) throw ConfigError("example1: M must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("example1: eps must be in (0,1)");

  ModelSpec m;
  m.name = "example1";
  m.dim = 3;
  m.regime_cap = M;
  m.levy = LevyMeasureSpec(3, 1.0, eps, [alpha](double r) {
    return std::pow(r, -(3.0 + alpha));
  });
  // gamma^2 * int |u|^2 nu = 1/2; the closed form of the moment is
  // 4*pi/(2-alpha) but the calibration goes through quadrature.
  const double gamma = std::sqrt(0.5 / m.levy.second_moment());

  m.drift = [](std::span<const double> x, int k) {
    Vec b(3);
    for (int j = 0; j < 3; ++j) {
      b[j] = -cbrt_signed(x[j]) - static_cast<double>(k) * x[j] * x[j] * x[j];
    }
    return b;
  };
  m.diffusion = [](std::span<const double> x, int k) {
    Mat s(3, 3);
    const double sk3 = std::sqrt(static_cast<double>(k)) / 3.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        s(i, j) = (i == j) ? pow23(x[j]) / std::sqrt(2.0) + 1.0
                           : sk3 * x[j] * x[j];
      }
    }
    return s;
  };
  m.jump_coeff = [gamma](std::span<const double> x, int,
                         std::span<const double> u) {
    const double r = norm2(u);
    Vec c(3);
    for (int j = 0; j < 3; ++j) c[j] = gamma * pow23(x[j]) * r;
    return c;
  };
  const double m1 = m.levy.first_moment_retained();
  m.jump_compensator = [gamma, m1](std::span<const double> x, int) {
    Vec c(3);
    for (int j = 0; j < 3; ++j) c[j] = gamma * pow23(x[j]) * m1;
    return c;
  };
  m.q_provider = [M, reflect_tail_to_cap](std::span<const double> x, int k,
                                          int l) {
    const double gate = example1_gate(x);
    double rate = static_cast<double>(k) * std::pow(2.0, -l) * gate;
    if (reflect_tail_to_cap && l == M) {
      // lump the dropped super-cap mass k * sum_{j>M} 2^{-j} onto the cap
      rate += static_cast<double>(k) * std::pow(2.0, -M) * gate;
    }
    return rate;
  };
  m.growth_modulus = unit_zeta();
  m.regime_weight = identity_weight();
  m.switch_majorant = [](int k) { return static_cast<double>(k); };
  return m;
}

ModelSpec example1_frozen_model(int M, int dim) {
  ModelSpec m = zero_model(dim, M);
  m.name = "example1_frozen";
  m.q_provider = [](std::span<const double> x, int k, int l) {
    return static_cast<double>(k) * std::pow(2.0, -l) * example1_gate(x);
  };
  m.switch_majorant = [](int k) { return static_cast<double>(k); };
  return m;
}

ModelSpec zero_model(int dim, int M) {
  ModelSpec m;
  m.name = "zero";
  m.dim = dim;
  m.regime_cap = M;
  m.drift = [dim](std::span<const double>, int) { return Vec(dim, 0.0); };
  m.diffusion = [dim](std::span<const double>, int) { return Mat(dim, dim); };
  m.jump_coeff = [dim](std::span<const double>, int, std::span<const double>) {
    return Vec(dim, 0.0);
  };
  m.jump_compensator = [dim](std::span<const double>, int) {
    return Vec(dim, 0.0);
  };
  m.q_provider = [](std::span<const double>, int, int) { return 0.0; };
  m.growth_modulus = unit_zeta();
  m.regime_weight = identity_weight();
  m.switch_majorant = [](int) { return 0.0; };
  return m;
}

ModelSpec geometric_rates_model(double kappa, int M, int dim) {
  ModelSpec m = zero_model(dim, M);
  m.name = "geometric_rates";
  m.q_provider = [kappa](std::span<const double>, int, int l) {
    return kappa * static_cast<double>(l) * std::pow(3.0, -l);
  };
  // sum_l l 3^{-l} = 3/4
  m.switch_majorant = [kappa](int) { return kappa * 0.75; };
  return m;
}

double truncation_tail_mass(double kappa, int M) {
  KahanSum s;
  for (int l = M + 1;; ++l) {
    const double term = kappa * static_cast<double>(l) * std::pow(3.0, -l);
    s.add(term);
    if (term < 1e-18 * (1.0 + s.value())) break;
  }
  return s.value();
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) { ok = true; break; }
    }
    if (!ok) throw ConfigError("unknown field '" + key + "' in " + where);
  }
}

}  // namespace

ModelSpec model_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model JSON parse error: ") + e.what());
  }
  if (!j.contains("family")) throw ConfigError("model: missing field 'family'");
  const std::string family = j.at("family").get<std::string>();

  if (family == "example1") {
    reject_unknown(j, {"family", "alpha", "M", "eps", "reflect_tail"}, "model");
    if (!j.contains("alpha")) throw ConfigError("example1: missing field 'alpha'");
    if (!j.contains("M")) throw ConfigError("example1: missing field 'M'");
    return example1_model(j.at("alpha").get<double>(), j.at("M").get<int>(),
                          j.value("eps", 0.05), j.value("reflect_tail", false));
  }
  if (family == "example1_frozen") {
    reject_unknown(j, {"family", "M", "dim"}, "model");
    if (!j.contains("M")) throw ConfigError("example1_frozen: missing field 'M'");
    return example1_frozen_model(j.at("M").get<int>(), j.value("dim", 3));
  }
  if (family == "zero") {
    reject_unknown(j, {"family", "dim", "M"}, "model");
    if (!j.contains("dim")) throw ConfigError("zero: missing field 'dim'");
    if (!j.contains("M")) throw ConfigError("zero: missing field 'M'");
    return zero_model(j.at("dim").get<int>(), j.at("M").get<int>());
  }
  if (family == "geometric_rates") {
    reject_unknown(j, {"family", "kappa", "M", "dim"}, "model");
    if (!j.contains("kappa")) throw ConfigError("geometric_rates: missing field 'kappa'");
    if (!j.contains("M")) throw ConfigError("geometric_rates: missing field 'M'");
    return geometric_rates_model(j.at("kappa").get<double>(),
                                 j.at("M").get<int>(), j.value("dim", 1));
  }
  throw ConfigError("unknown model family '" + family + "'");
}

}  // namespace hybridsde
