#pragma once

// Isometry words acting on model spaces: twists on cusp factors, translations
// along axes of the hyperbolic plane, and Euclidean translations.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "harmlab/errors.hpp"
#include "harmlab/space.hpp"

namespace harmlab {

struct Generator {
  enum class Kind { Twist, HyperbolicTranslation, EuclideanTranslation };

  Kind kind = Kind::Twist;
  /// Twist: curve index, 1-based over the cusp factors of the space.
  /// Translations: 0-based index among the hyperbolic (resp. Euclidean) factors.
  int slot = 1;
  /// Hyperbolic translation length along the axis through the basepoint at `angle`.
  double length = 0.0;
  double angle = 0.0;
  std::vector<double> offset;
  int power = 1;

  friend bool operator==(const Generator&, const Generator&) = default;
};

inline Generator twist(int curve, int power = 1) {
  require(curve >= 1, "twist: curve index must be >= 1");
  return Generator{Generator::Kind::Twist, curve, 0.0, 0.0, {}, power};
}

inline Generator hyperbolic_translation(double length, double angle = 0.0, int slot = 0, int power = 1) {
  require(std::isfinite(length) && std::isfinite(angle), "hyperbolic translation: parameters must be finite");
  return Generator{Generator::Kind::HyperbolicTranslation, slot, length, angle, {}, power};
}

inline Generator euclidean_translation(std::vector<double> offset, int slot = 0, int power = 1) {
  return Generator{Generator::Kind::EuclideanTranslation, slot, 0.0, 0.0, std::move(offset), power};
}

/// A finite product g_1 g_2 ... g_k of generator powers; applying it to a point applies g_k first.
struct IsometryWord {
  std::vector<Generator> letters;

  static IsometryWord identity() { return {}; }
  bool is_identity() const { return letters.empty(); }

  IsometryWord inverse() const {
    IsometryWord w;
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
      Generator g = *it;
      g.power = -g.power;
      w.letters.push_back(std::move(g));
    }
    return w;
  }

  IsometryWord then(const IsometryWord& after) const {
    IsometryWord w = after;
    w.letters.insert(w.letters.end(), letters.begin(), letters.end());
    return w;
  }

  friend bool operator==(const IsometryWord&, const IsometryWord&) = default;
};

inline IsometryWord word(std::initializer_list<Generator> gens) { return IsometryWord{std::vector<Generator>(gens)}; }

namespace isometry_detail {

struct Counters {
  int cusp = 0;
  int hyperbolic = 0;
  int euclidean = 0;
};

inline std::array<double, 3> boost_along(const std::array<double, 3>& x, double length, double angle) {
  // Rotate the axis onto x1, boost, rotate back.
  const double c = std::cos(angle), s = std::sin(angle);
  const double y1 = c * x[1] + s * x[2];
  const double y2 = -s * x[1] + c * x[2];
  const double ch = std::cosh(length), sh = std::sinh(length);
  const double z0 = ch * x[0] + sh * y1;
  const double z1 = sh * x[0] + ch * y1;
  return {z0, c * z1 - s * y2, s * z1 + c * y2};
}

inline SpacePoint apply_generator(const NpcSpace& space, const Generator& g, const SpacePoint& p, Counters& ctr) {
  return std::visit(
      [&](const auto& s) -> SpacePoint {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Euclidean>) {
          const int idx = ctr.euclidean++;
          if (g.kind != Generator::Kind::EuclideanTranslation || g.slot != idx) return p;
          auto x = std::get<EuclideanPoint>(p.value).x;
          require(g.offset.size() == x.size(), "euclidean translation: offset dimension mismatch");
          for (std::size_t i = 0; i < x.size(); ++i) x[i] += g.power * g.offset[i];
          return euclidean_point(std::move(x));
        } else if constexpr (std::is_same_v<S, HyperbolicPlane>) {
          const int idx = ctr.hyperbolic++;
          if (g.kind != Generator::Kind::HyperbolicTranslation || g.slot != idx) return p;
          const auto& h = std::get<HyperboloidPoint>(p.value);
          return SpacePoint{space_detail::renormalize(boost_along(h.x, g.power * g.length, g.angle))};
        } else if constexpr (std::is_same_v<S, StarTree>) {
          return p;
        } else if constexpr (std::is_same_v<S, CuspFactor>) {
          const int curve = ++ctr.cusp;
          if (g.kind != Generator::Kind::Twist || g.slot != curve) return p;
          const auto& c = std::get<CuspPoint>(p.value);
          if (c.pinned()) return p;
          return SpacePoint{CuspPoint{c.u, *c.theta + static_cast<double>(g.power)}};
        } else {
          const auto& pp = std::get<ProductPoint>(p.value);
          std::vector<SpacePoint> out;
          out.reserve(pp.factors.size());
          for (std::size_t i = 0; i < pp.factors.size(); ++i)
            out.push_back(apply_generator(s.factors[i], g, pp.factors[i], ctr));
          return product_point(std::move(out));
        }
      },
      space.kind);
}

}  // namespace isometry_detail

/// Applies the word to a point. Twists on pinched factors act trivially.
inline SpacePoint apply_isometry(const NpcSpace& space, const IsometryWord& w, const SpacePoint& p) {
  SpacePoint out = p;
  for (auto it = w.letters.rbegin(); it != w.letters.rend(); ++it) {
    isometry_detail::Counters ctr;
    out = isometry_detail::apply_generator(space, *it, out, ctr);
  }
  return out;
}

/// True when some letter of the word twists the given curve by a nonzero net amount.
inline bool twists_curve(const IsometryWord& w, int curve) {
  int net = 0;
  for (const auto& g : w.letters)
    if (g.kind == Generator::Kind::Twist && g.slot == curve) net += g.power;
  return net != 0;
}

// ---------------------------------------------------------------------------
// Text form: letters joined by '*', e.g. "twist(1)^-1*htrans(1,0.5)", "id" for the identity.
//   twist(i)               curve i
//   htrans(length[,angle[,slot]])
//   etrans(v1[,v2...])     acts on the first Euclidean factor

inline std::string to_string(const Generator& g) {
  std::ostringstream os;
  os.precision(17);
  switch (g.kind) {
    case Generator::Kind::Twist: os << "twist(" << g.slot << ")"; break;
    case Generator::Kind::HyperbolicTranslation:
      os << "htrans(" << g.length << "," << g.angle << "," << g.slot << ")";
      break;
    case Generator::Kind::EuclideanTranslation: {
      os << "etrans(";
      for (std::size_t i = 0; i < g.offset.size(); ++i) os << (i ? "," : "") << g.offset[i];
      os << ")";
      break;
    }
  }
  if (g.power != 1) os << "^" << g.power;
  return os.str();
}

inline std::string to_string(const IsometryWord& w) {
  if (w.letters.empty()) return "id";
  std::string out;
  for (std::size_t i = 0; i < w.letters.size(); ++i) out += (i ? "*" : "") + to_string(w.letters[i]);
  return out;
}

namespace isometry_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("isometry word: '" + s + "' is not a number");
  }
  if (used != s.size()) throw InputError("isometry word: '" + s + "' is not a number");
  return v;
}

inline int to_int(const std::string& s) {
  const double v = to_double(s);
  if (v != std::floor(v)) throw InputError("isometry word: '" + s + "' is not an integer");
  return static_cast<int>(v);
}

inline Generator parse_generator(const std::string& text) {
  std::string t = trim(text);
  int power = 1;
  if (const auto caret = t.rfind('^'); caret != std::string::npos && caret > t.rfind(')')) {
    power = to_int(trim(t.substr(caret + 1)));
    t = trim(t.substr(0, caret));
  }
  const auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')') throw InputError("isometry word: malformed letter '" + text + "'");
  const std::string name = trim(t.substr(0, open));
  std::vector<std::string> args;
  std::stringstream ss(t.substr(open + 1, t.size() - open - 2));
  for (std::string a; std::getline(ss, a, ',');) args.push_back(trim(a));
  Generator g;
  if (name == "twist") {
    if (args.size() != 1) throw InputError("isometry word: twist takes one curve index");
    g = twist(to_int(args[0]));
  } else if (name == "htrans") {
    if (args.empty() || args.size() > 3) throw InputError("isometry word: htrans takes length[,angle[,slot]]");
    g = hyperbolic_translation(to_double(args[0]), args.size() > 1 ? to_double(args[1]) : 0.0,
                               args.size() > 2 ? to_int(args[2]) : 0);
  } else if (name == "etrans") {
    if (args.empty()) throw InputError("isometry word: etrans needs an offset");
    std::vector<double> off;
    for (const auto& a : args) off.push_back(to_double(a));
    g = euclidean_translation(std::move(off));
  } else {
    throw InputError("isometry word: unknown generator '" + name + "'");
  }
  g.power = power;
  return g;
}

}  // namespace isometry_detail

inline IsometryWord parse_word(const std::string& text) {
  const std::string t = isometry_detail::trim(text);
  if (t == "id" || t.empty()) return IsometryWord::identity();
  IsometryWord w;
  std::size_t depth = 0, start = 0;
  for (std::size_t i = 0; i <= t.size(); ++i) {
    if (i < t.size() && t[i] == '(') ++depth;
    if (i < t.size() && t[i] == ')') --depth;
    if (i == t.size() || (t[i] == '*' && depth == 0)) {
      w.letters.push_back(isometry_detail::parse_generator(t.substr(start, i - start)));
      start = i + 1;
    }
  }
  return w;
}

}  // namespace harmlab
