#include "ccroots/basins.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include "ccroots/tracker.hpp"

namespace ccroots {

// ---------------------------------------------------------------------------
// Univariate polynomials
// ---------------------------------------------------------------------------

int Univariate::degree() const noexcept {
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k)
    if (coeffs[static_cast<std::size_t>(k)] != cplx(0.0)) return k;
  return -1;
}

cplx Univariate::eval(cplx z) const {
  cplx r(0.0);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * z + *it;
  return r;
}

cplx Univariate::derivative(cplx z) const {
  cplx r(0.0);
  for (std::size_t k = coeffs.size(); k-- > 1;) r = r * z + static_cast<double>(k) * coeffs[k];
  return r;
}

namespace {

struct Token {
  enum Kind { number, z, i, caret, plus, minus, star, end } kind;
  std::string text;
  std::size_t pos;
  double value = 0.0;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t k = 0;
  while (k < s.size()) {
    const char c = s[k];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++k;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t e = k;
      bool dot = false;
      while (e < s.size() && (std::isdigit(static_cast<unsigned char>(s[e])) || (s[e] == '.' && !dot))) {
        dot = dot || s[e] == '.';
        ++e;
      }
      // Optional exponent, taken only when digits follow.
      if (e < s.size() && (s[e] == 'e' || s[e] == 'E')) {
        std::size_t x = e + 1;
        if (x < s.size() && (s[x] == '+' || s[x] == '-')) ++x;
        if (x < s.size() && std::isdigit(static_cast<unsigned char>(s[x]))) {
          while (x < s.size() && std::isdigit(static_cast<unsigned char>(s[x]))) ++x;
          e = x;
        }
      }
      const std::string text = s.substr(k, e - k);
      if (text == ".") throw ParseError("unexpected token '.' at position " + std::to_string(k + 1));
      out.push_back({Token::number, text, k, std::stod(text)});
      k = e;
      continue;
    }
    Token::Kind kind;
    switch (c) {
      case 'z': kind = Token::z; break;
      case 'i': kind = Token::i; break;
      case '^': kind = Token::caret; break;
      case '+': kind = Token::plus; break;
      case '-': kind = Token::minus; break;
      case '*': kind = Token::star; break;
      default: {
        std::size_t e = k + 1;
        while (e < s.size() && std::isalnum(static_cast<unsigned char>(s[e])) && std::isalpha(static_cast<unsigned char>(c))) ++e;
        throw ParseError("unexpected token '" + s.substr(k, e - k) + "' at position " + std::to_string(k + 1));
      }
    }
    out.push_back({kind, std::string(1, c), k, 0.0});
    ++k;
  }
  out.push_back({Token::end, "", s.size(), 0.0});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Univariate parse() {
    std::vector<cplx> acc;
    auto add = [&](const std::vector<cplx>& term, double sign) {
      if (acc.size() < term.size()) acc.resize(term.size(), 0.0);
      for (std::size_t k = 0; k < term.size(); ++k) acc[k] += sign * term[k];
    };
    double sign = 1.0;
    if (peek().kind == Token::plus || peek().kind == Token::minus) sign = next().kind == Token::minus ? -1.0 : 1.0;
    add(term(), sign);
    while (peek().kind == Token::plus || peek().kind == Token::minus) {
      sign = next().kind == Token::minus ? -1.0 : 1.0;
      add(term(), sign);
    }
    if (peek().kind != Token::end) fail(peek());
    Univariate u{std::move(acc)};
    u.coeffs.resize(static_cast<std::size_t>(std::max(0, u.degree() + 1)));
    return u;
  }

 private:
  const Token& peek() const { return t_[k_]; }
  const Token& next() { return t_[k_++]; }
  [[noreturn]] static void fail(const Token& tok) {
    if (tok.kind == Token::end) throw ParseError("unexpected end of input");
    throw ParseError("unexpected token '" + tok.text + "' at position " + std::to_string(tok.pos + 1));
  }
  static bool starts_factor(const Token& tok) {
    return tok.kind == Token::number || tok.kind == Token::z || tok.kind == Token::i;
  }

  // A term is a monomial c * z^k.
  std::vector<cplx> term() {
    cplx c(1.0);
    int power = 0;
    if (!starts_factor(peek())) fail(peek());
    factor(c, power);
    while (true) {
      if (peek().kind == Token::star) {
        next();
        if (!starts_factor(peek())) fail(peek());
        factor(c, power);
      } else if (starts_factor(peek())) {
        factor(c, power);
      } else {
        break;
      }
    }
    std::vector<cplx> out(static_cast<std::size_t>(power) + 1, 0.0);
    out.back() = c;
    return out;
  }

  void factor(cplx& c, int& power) {
    const Token& tok = next();
    int exponent = 1;
    if (peek().kind == Token::caret) {
      const Token& caret = next();
      if (tok.kind == Token::number) fail(caret);
      const Token& e = next();
      if (e.kind != Token::number || e.text.find('.') != std::string::npos) fail(e);
      exponent = std::stoi(e.text);
    }
    switch (tok.kind) {
      case Token::number: c *= tok.value; break;
      case Token::i: c *= std::pow(cplx(0.0, 1.0), exponent); break;
      case Token::z: power += exponent; break;
      default: fail(tok);
    }
    if (power > 1000) throw ParseError("polynomial degree above 1000");
  }

  std::vector<Token> t_;
  std::size_t k_ = 0;
};

}  // namespace

Univariate parse_univariate(const std::string& text) { return Parser(tokenize(text)).parse(); }

// ---------------------------------------------------------------------------
// Scans
// ---------------------------------------------------------------------------

void Window::validate() const {
  if (!(std::isfinite(re_min) && std::isfinite(re_max) && std::isfinite(im_min) && std::isfinite(im_max)) ||
      !(re_min < re_max && im_min < im_max))
    throw InvalidArgument("window must satisfy re_min < re_max and im_min < im_max");
}

cplx BasinGrid::pixel(int row, int col) const {
  const double re = width == 1 ? 0.5 * (window.re_min + window.re_max)
                               : window.re_min + (window.re_max - window.re_min) * col / (width - 1);
  const double im = height == 1 ? 0.5 * (window.im_min + window.im_max)
                                : window.im_max - (window.im_max - window.im_min) * row / (height - 1);
  return {re, im};
}

namespace {

struct PixelOutcome {
  bool converged = false;
  cplx limit;
  int iterations = 0;
};

using Iteration = std::function<PixelOutcome(cplx)>;
using Polish = std::function<cplx(cplx)>;

BasinGrid scan(const Iteration& iterate, const Polish& polish, const Window& window, int width, int height,
               const BasinOptions& opts) {
  window.validate();
  if (width < 1 || height < 1) throw InvalidArgument("resolution must be at least 1x1");
  if (opts.max_iters < 1 || !(opts.tol > 0) || !(opts.match_radius > 0))
    throw InvalidArgument("basin options must be positive");
  BasinGrid g;
  g.window = window;
  g.width = width;
  g.height = height;
  g.max_iters = opts.max_iters;
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<PixelOutcome> px(n);

  std::atomic<int> next_row{0};
  auto worker = [&]() {
    for (int r = next_row++; r < height; r = next_row++)
      for (int c = 0; c < width; ++c) px[static_cast<std::size_t>(r) * width + c] = iterate(g.pixel(r, c));
  };
  const int n_threads = std::min(resolve_threads(opts.threads), height);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Sequential registry pass keeps indices independent of scheduling.
  g.roots = opts.seed_roots;
  g.assignment.assign(n, -1);
  g.iterations.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    g.iterations[k] = px[k].iterations;
    if (!px[k].converged) continue;
    int best = -1;
    double best_d = opts.match_radius;
    for (std::size_t r = 0; r < g.roots.size(); ++r) {
      const double d = std::abs(g.roots[r] - px[k].limit);
      if (d <= best_d && (best < 0 || d < best_d)) {
        best = static_cast<int>(r);
        best_d = d;
      }
    }
    if (best < 0) {
      g.roots.push_back(polish(px[k].limit));
      best = static_cast<int>(g.roots.size()) - 1;
    }
    g.assignment[k] = best;
  }
  return g;
}

}  // namespace

BasinGrid basin_scan(const Univariate& f, const Window& window, int width, int height, const BasinOptions& opts) {
  if (f.degree() < 1) throw InvalidArgument("basin scan needs a non-constant polynomial");
  const Iteration iterate = [&](cplx z) {
    PixelOutcome o;
    for (int it = 1; it <= opts.max_iters; ++it) {
      const cplx d = f.derivative(z);
      if (d == cplx(0.0)) return o;
      const cplx dz = f.eval(z) / d;
      z -= dz;
      o.iterations = it;
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return o;
      if (std::abs(dz) <= opts.tol * std::max(1.0, std::abs(z))) {
        o.converged = true;
        o.limit = z;
        return o;
      }
    }
    return o;
  };
  const Polish polish = [&](cplx z) {
    for (int it = 0; it < 20; ++it) {
      const cplx d = f.derivative(z);
      if (d == cplx(0.0)) break;
      const cplx dz = f.eval(z) / d;
      z -= dz;
      if (std::abs(dz) <= 1e-16 * std::max(1.0, std::abs(z))) break;
    }
    return z;
  };
  return scan(iterate, polish, window, width, height, opts);
}

BasinGrid basin_scan(const SliceSpec& slice, const Window& window, int width, int height, const BasinOptions& opts) {
  const auto& sys = slice.system;
  if (!sys.is_square()) throw DimensionMismatch("slice system must be square");
  if (slice.base.size() != sys.n_vars() || slice.direction.size() != sys.n_vars())
    throw DimensionMismatch("slice base and direction must match the variable count");
  if (slice.direction.norm() == 0.0) throw InvalidArgument("slice direction must be nonzero");

  // One Gauss-Newton step for min ||F(base + z dir)||^2; returns (dz, ||F||_inf).
  auto step = [&](cplx z) {
    const CVector x = slice.base + z * slice.direction;
    CVector v;
    CMatrix j;
    sys.eval_with_jacobian(std::span<const cplx>(x.data(), static_cast<std::size_t>(x.size())), v, j);
    const CVector gp = j * slice.direction;
    const double den = gp.squaredNorm();
    const double res = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (den == 0.0) return std::pair<cplx, double>{cplx(std::nan(""), 0.0), res};
    return std::pair<cplx, double>{gp.dot(v) / den, res};
  };
  const Iteration iterate = [&](cplx z) {
    PixelOutcome o;
    for (int it = 1; it <= opts.max_iters; ++it) {
      const auto [dz, res_before] = step(z);
      if (!std::isfinite(dz.real()) || !std::isfinite(dz.imag())) return o;
      z -= dz;
      o.iterations = it;
      if (std::abs(dz) <= opts.tol * std::max(1.0, std::abs(z))) {
        if (step(z).second < 1e-8) {
          o.converged = true;
          o.limit = z;
        }
        return o;
      }
    }
    return o;
  };
  const Polish polish = [&](cplx z) {
    for (int it = 0; it < 20; ++it) {
      const auto [dz, r] = step(z);
      if (!std::isfinite(dz.real()) || !std::isfinite(dz.imag())) break;
      z -= dz;
      if (std::abs(dz) <= 1e-16 * std::max(1.0, std::abs(z))) break;
    }
    return z;
  };
  return scan(iterate, polish, window, width, height, opts);
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

std::vector<Rgb> default_palette(std::size_t n) {
  std::vector<Rgb> out;
  for (std::size_t k = 0; k < n; ++k) {
    // Hue sequence red, blue, green, then evenly spaced remaining hues.
    static constexpr double base[] = {0.0, 240.0, 120.0};
    const double hue = k < 3 ? base[k] : std::fmod(60.0 + 137.508 * static_cast<double>(k - 3), 360.0);
    const double h = hue / 60.0;
    const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h) % 6) {
      case 0: r = 1; g = x; break;
      case 1: r = x; g = 1; break;
      case 2: g = 1; b = x; break;
      case 3: g = x; b = 1; break;
      case 4: r = x; b = 1; break;
      default: r = 1; b = x; break;
    }
    out.push_back({static_cast<std::uint8_t>(std::lround(255 * r)), static_cast<std::uint8_t>(std::lround(255 * g)),
                   static_cast<std::uint8_t>(std::lround(255 * b))});
  }
  return out;
}

std::string render_ppm(const BasinGrid& grid, const std::vector<Rgb>& palette) {
  if (palette.size() < grid.roots.size())
    throw InvalidArgument("palette has " + std::to_string(palette.size()) + " colors for " +
                          std::to_string(grid.roots.size()) + " roots");
  const std::size_t n = static_cast<std::size_t>(grid.width) * grid.height;
  std::string img = "P6\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
  const std::size_t header = img.size();
  img.resize(header + 3 * n, '\0');
  for (std::size_t k = 0; k < n; ++k) {
    const int a = grid.assignment[k];
    if (a < 0) continue;
    const double shade = 1.0 - 0.75 * std::min(1.0, static_cast<double>(grid.iterations[k]) / grid.max_iters);
    for (int ch = 0; ch < 3; ++ch)
      img[header + 3 * k + ch] = static_cast<char>(std::lround(palette[static_cast<std::size_t>(a)][ch] * shade));
  }
  // Root markers.
  const auto& w = grid.window;
  for (const cplx& r : grid.roots) {
    if (r.real() < w.re_min || r.real() > w.re_max || r.imag() < w.im_min || r.imag() > w.im_max) continue;
    const int col = grid.width == 1 ? 0
                                    : static_cast<int>(std::lround((r.real() - w.re_min) / (w.re_max - w.re_min) *
                                                                   (grid.width - 1)));
    const int row = grid.height == 1 ? 0
                                     : static_cast<int>(std::lround((w.im_max - r.imag()) / (w.im_max - w.im_min) *
                                                                    (grid.height - 1)));
    const std::size_t k = static_cast<std::size_t>(row) * grid.width + col;
    for (int ch = 0; ch < 3; ++ch) img[header + 3 * k + ch] = static_cast<char>(255);
  }
  return img;
}

std::string assignment_csv(const BasinGrid& grid) {
  std::ostringstream os;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) os << (c ? "," : "") << grid.at(r, c);
    os << '\n';
  }
  return os.str();
}

}  // namespace ccroots
