#pragma once

#include "escape_lab/core.hpp"
#include "escape_lab/function_catalog.hpp"
#include "escape_lab/modulus_profiler.hpp"
#include "escape_lab/worker_pool.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace escape_lab {

inline constexpr std::size_t kDefaultPixelBudget = std::size_t{2048} * 2048;

struct GridSpec {
  Complex center{0.0, 0.0};
  double width = 1.0;
  double height = 1.0;
  std::size_t nx = 64;
  std::size_t ny = 64;
  std::size_t max_iter = 100;
  double bailout = 1e3;
  std::size_t confirm_steps = 3;

  std::size_t pixels() const { return nx * ny; }

  // Row 0 is the top edge (largest imaginary part).
  Complex pixel_center(std::size_t ix, std::size_t iy) const {
    const double x = center.real() - 0.5 * width + (static_cast<double>(ix) + 0.5) * width / static_cast<double>(nx);
    const double y = center.imag() + 0.5 * height - (static_cast<double>(iy) + 0.5) * height / static_cast<double>(ny);
    return {x, y};
  }

  void validate(std::size_t pixel_budget = kDefaultPixelBudget) const {
    if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height)) {
      throw Error(ErrorKind::InvalidSpec, "grid width and height must be finite and > 0");
    }
    if (nx == 0 || ny == 0) throw Error(ErrorKind::InvalidSpec, "grid needs nx, ny >= 1");
    if (ny > pixel_budget / nx) {
      throw Error(ErrorKind::InvalidSpec, "grid of " + std::to_string(nx) + "x" + std::to_string(ny) +
                                              " pixels exceeds the budget of " + std::to_string(pixel_budget));
    }
    if (max_iter == 0) throw Error(ErrorKind::InvalidSpec, "max_iter must be >= 1");
    if (!(bailout >= 1e3) || !std::isfinite(bailout)) throw Error(ErrorKind::InvalidSpec, "bailout must be >= 1e3");
    if (confirm_steps == 0) throw Error(ErrorKind::InvalidSpec, "confirm_steps must be >= 1");
  }
};

enum class PixelClass : std::uint8_t { Escaping, Bounded, Undetermined };

inline std::string_view to_string(PixelClass c) {
  switch (c) {
    case PixelClass::Escaping: return "Escaping";
    case PixelClass::Bounded: return "Bounded";
    case PixelClass::Undetermined: return "Undetermined";
  }
  return "Unknown";
}

/// Iterated-M ladder: entry n is log M^n(e^{entries[0]}), possibly cut short.
struct MLadder {
  std::vector<double> entries;
  bool overflow = false;  // LadderOverflow: truncated before the requested length
};

struct EscapeGrid {
  GridSpec spec;
  std::uint64_t function_hash = 0;
  std::vector<PixelClass> cls;
  std::vector<std::uint32_t> step;  // first exceedance, for Escaping pixels
  std::vector<std::uint8_t> fast_mask;
  std::vector<std::uint8_t> bd_mask;
  // log|f^n(z)| for escaping pixels only, flattened in pixel order;
  // orbit_offset has pixels() + 1 entries. +inf marks an unsummable step.
  std::vector<std::size_t> orbit_offset;
  std::vector<double> orbit_logs;

  // Parameters and ladders used by the mask passes.
  double fast_logR = 0.0;
  std::size_t L_max = 0;
  MLadder fast_ladder;
  Disc bd_disc;
  bool include_n0 = false;
  MLadder bd_ladder;

  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * spec.nx + ix; }
  std::size_t orbit_length(std::size_t i) const { return orbit_offset[i + 1] - orbit_offset[i]; }
  const double* orbit(std::size_t i) const { return orbit_logs.data() + orbit_offset[i]; }
};

namespace detail {

struct PixelOutcome {
  PixelClass cls = PixelClass::Undetermined;
  std::uint32_t step = 0;
  std::vector<double> logs;
};

inline PixelOutcome classify_pixel(const FunctionSpec& f, Complex z0, const GridSpec& g) {
  const double log_bail = std::log(g.bailout);
  const double log_bounded = 0.5 * log_bail;
  PixelOutcome out;
  std::vector<double>& logs = out.logs;
  logs.reserve(g.max_iter + g.confirm_steps + 1);

  Complex z = z0;
  logs.push_back(std::log(std::abs(z0)));
  bool overflow = false;
  constexpr std::size_t kNoRun = std::numeric_limits<std::size_t>::max();
  std::size_t run_start = kNoRun;
  bool ever_exceeded = false;

  for (std::size_t k = 0;; ++k) {
    if (k > 0) {
      const auto e = step(f, z);
      if (!e) {
        logs.push_back(kInf);
        overflow = true;
      } else {
        logs.push_back(e->log_abs);
        if (!std::isfinite(e->value.real()) || !std::isfinite(e->value.imag())) overflow = true;
        z = e->value;
      }
    }
    const double lk = logs[k];
    const bool exceeds = overflow || lk > log_bail;
    if (exceeds) {
      if (k <= g.max_iter) ever_exceeded = true;
      const bool grows = k > 0 && (overflow || lk > logs[k - 1]);
      if (run_start == kNoRun || !grows) run_start = k <= g.max_iter ? k : kNoRun;
    } else {
      run_start = kNoRun;
    }
    if (run_start != kNoRun && (overflow || k - run_start >= g.confirm_steps)) {
      out.cls = PixelClass::Escaping;
      out.step = static_cast<std::uint32_t>(run_start);
      return out;
    }
    if (overflow) break;
    if (k >= g.max_iter && run_start == kNoRun) break;
  }

  if (!ever_exceeded && logs.size() > g.max_iter) {
    bool settled = true;
    for (std::size_t k = g.max_iter / 2; k <= g.max_iter; ++k) {
      if (!(logs[k] <= log_bounded)) {
        settled = false;
        break;
      }
    }
    if (settled) out.cls = PixelClass::Bounded;
  }
  return out;
}

}  // namespace detail

/// Iterates every pixel center and sorts it into Escaping(n), Bounded or
/// Undetermined.
inline EscapeGrid classify_grid(const FunctionSpec& f, const GridSpec& g, WorkerPool* pool = nullptr,
                                std::size_t pixel_budget = kDefaultPixelBudget) {
  f.validate();
  g.validate(pixel_budget);
  const std::size_t n = g.pixels();
  EscapeGrid grid;
  grid.spec = g;
  grid.function_hash = function_hash(f);
  grid.cls.assign(n, PixelClass::Undetermined);
  grid.step.assign(n, 0);
  grid.fast_mask.assign(n, 0);
  grid.bd_mask.assign(n, 0);

  std::vector<std::vector<std::vector<double>>> row_orbits(g.ny);
  for_each_index(pool, g.ny, [&](std::size_t iy) {
    auto& orbits = row_orbits[iy];
    orbits.resize(g.nx);
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      auto res = detail::classify_pixel(f, g.pixel_center(ix, iy), g);
      const std::size_t i = iy * g.nx + ix;
      grid.cls[i] = res.cls;
      grid.step[i] = res.step;
      if (res.cls == PixelClass::Escaping) orbits[ix] = std::move(res.logs);
    }
  });

  grid.orbit_offset.assign(n + 1, 0);
  std::size_t total = 0;
  for (std::size_t iy = 0; iy < g.ny; ++iy) {
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      grid.orbit_offset[iy * g.nx + ix] = total;
      total += row_orbits[iy][ix].size();
    }
  }
  grid.orbit_offset[n] = total;
  grid.orbit_logs.reserve(total);
  for (auto& row : row_orbits) {
    for (auto& o : row) grid.orbit_logs.insert(grid.orbit_logs.end(), o.begin(), o.end());
  }
  return grid;
}

/// log M^n(e^{log_start}) for n = 0 .. length-1, truncated (and flagged) once
/// the next value leaves the representable log range.
inline MLadder iterated_max_modulus_ladder(const FunctionSpec& f, double log_start, std::size_t length) {
  MLadder ladder;
  ladder.entries.push_back(log_start);
  while (ladder.entries.size() < length) {
    try {
      const double next = log_max_modulus(f, ladder.entries.back()).log_value;
      if (!std::isfinite(next)) {
        ladder.overflow = true;
        break;
      }
      ladder.entries.push_back(next);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OverflowDomain) throw;
      ladder.overflow = true;
      break;
    }
  }
  return ladder;
}

/// Marks pixels whose orbit outruns the iterated maximum modulus:
/// some L in 1..L_max has log|f^{n+L}(z)| > log M^n(R) for every comparable n >= 1.
inline void classify_fast(const FunctionSpec& f, EscapeGrid& grid, double logR, std::size_t L_max) {
  if (L_max == 0) throw Error(ErrorKind::PreconditionViolated, "L_max must be >= 1");
  grid.fast_logR = logR;
  grid.L_max = L_max;
  grid.fast_ladder = iterated_max_modulus_ladder(f, logR, grid.spec.max_iter + grid.spec.confirm_steps + 1);
  const auto& lad = grid.fast_ladder.entries;
  for (std::size_t i = 0; i < grid.cls.size(); ++i) {
    grid.fast_mask[i] = 0;
    if (grid.cls[i] != PixelClass::Escaping) continue;
    const double* o = grid.orbit(i);
    const std::size_t len = grid.orbit_length(i);
    for (std::size_t L = 1; L <= L_max && !grid.fast_mask[i]; ++L) {
      std::size_t compared = 0;
      bool ok = true;
      for (std::size_t n = 1; n < lad.size() && n + L < len; ++n) {
        ++compared;
        if (!(o[n + L] > lad[n])) {
          ok = false;
          break;
        }
      }
      if (ok && compared > 0) grid.fast_mask[i] = 1;
    }
  }
}

/// Marks fast-escaping pixels whose orbit stays outside the disc bounding
/// f^n(D): log|f^n(z)| > log M^n(|c| + r) for every comparable n.
inline void classify_bd(const FunctionSpec& f, EscapeGrid& grid, const Disc& D, bool include_n0 = false) {
  if (!(D.radius > 0.0)) throw Error(ErrorKind::PreconditionViolated, "disc radius must be > 0");
  grid.bd_disc = D;
  grid.include_n0 = include_n0;
  grid.bd_ladder = iterated_max_modulus_ladder(f, std::log(D.outer_radius()), grid.spec.max_iter + grid.spec.confirm_steps + 1);
  const auto& lad = grid.bd_ladder.entries;
  const std::size_t n0 = include_n0 ? 0 : 1;
  for (std::size_t i = 0; i < grid.cls.size(); ++i) {
    grid.bd_mask[i] = 0;
    if (grid.cls[i] != PixelClass::Escaping || !grid.fast_mask[i]) continue;
    const double* o = grid.orbit(i);
    const std::size_t len = grid.orbit_length(i);
    std::size_t compared = 0;
    bool ok = true;
    for (std::size_t n = n0; n < lad.size() && n < len; ++n) {
      ++compared;
      if (!(o[n] > lad[n])) {
        ok = false;
        break;
      }
    }
    grid.bd_mask[i] = ok && compared > 0 ? 1 : 0;
  }
}

struct MaskInclusion {
  std::size_t bd_not_fast = 0;
  std::size_t fast_not_escaping = 0;
  bool holds() const { return bd_not_fast == 0 && fast_not_escaping == 0; }
};

inline MaskInclusion check_mask_inclusion(const EscapeGrid& g) {
  MaskInclusion m;
  for (std::size_t i = 0; i < g.cls.size(); ++i) {
    if (g.bd_mask[i] && !g.fast_mask[i]) ++m.bd_not_fast;
    if (g.fast_mask[i] && g.cls[i] != PixelClass::Escaping) ++m.fast_not_escaping;
  }
  return m;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

struct BoundingBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive pixel bounds
  std::size_t pixels = 0;
};

struct ConnectivityReport {
  std::size_t escaping_pixels = 0;
  std::size_t escaping_components = 0;
  std::size_t hole_components = 0;
  double largest_component_fraction = 0.0;
  std::vector<BoundingBox> hole_bounding_boxes;
};

/// Escaping pixels are joined 4-connected; the complement is traced
/// 8-connected so that a ring of escaping pixels really encloses its holes.
inline ConnectivityReport connectivity(const std::vector<std::uint8_t>& escaping, std::size_t nx, std::size_t ny) {
  if (escaping.size() != nx * ny) throw Error(ErrorKind::PreconditionViolated, "mask size does not match nx * ny");
  ConnectivityReport rep;
  const std::size_t n = nx * ny;
  UnionFind uf(n);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t i = y * nx + x;
      if (!escaping[i]) continue;
      ++rep.escaping_pixels;
      if (x + 1 < nx && escaping[i + 1]) uf.unite(i, i + 1);
      if (y + 1 < ny && escaping[i + nx]) uf.unite(i, i + nx);
    }
  }
  std::vector<std::size_t> sizes(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (escaping[i]) ++sizes[uf.find(i)];
  }
  std::size_t largest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[i] > 0) {
      ++rep.escaping_components;
      largest = std::max(largest, sizes[i]);
    }
  }
  if (rep.escaping_pixels > 0) {
    rep.largest_component_fraction = static_cast<double>(largest) / static_cast<double>(rep.escaping_pixels);
  }

  // 0 = unvisited complement, 1 = exterior, 2 = hole
  std::vector<std::uint8_t> mark(n, 0);
  std::vector<std::size_t> stack;
  auto flood = [&](std::size_t seed, std::uint8_t label, BoundingBox* box) {
    stack.push_back(seed);
    mark[seed] = label;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t x = i % nx, y = i / nx;
      if (box) {
        box->x0 = std::min(box->x0, x);
        box->x1 = std::max(box->x1, x);
        box->y0 = std::min(box->y0, y);
        box->y1 = std::max(box->y1, y);
        ++box->pixels;
      }
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const auto xx = static_cast<std::ptrdiff_t>(x) + dx;
          const auto yy = static_cast<std::ptrdiff_t>(y) + dy;
          if (xx < 0 || yy < 0 || xx >= static_cast<std::ptrdiff_t>(nx) || yy >= static_cast<std::ptrdiff_t>(ny)) continue;
          const std::size_t j = static_cast<std::size_t>(yy) * nx + static_cast<std::size_t>(xx);
          if (escaping[j] || mark[j]) continue;
          mark[j] = label;
          stack.push_back(j);
        }
      }
    }
  };
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y : {std::size_t{0}, ny - 1}) {
      const std::size_t i = y * nx + x;
      if (!escaping[i] && !mark[i]) flood(i, 1, nullptr);
    }
  }
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x : {std::size_t{0}, nx - 1}) {
      const std::size_t i = y * nx + x;
      if (!escaping[i] && !mark[i]) flood(i, 1, nullptr);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (escaping[i] || mark[i]) continue;
    BoundingBox box{i % nx, i / nx, i % nx, i / nx, 0};
    flood(i, 2, &box);
    rep.hole_bounding_boxes.push_back(box);
  }
  rep.hole_components = rep.hole_bounding_boxes.size();
  return rep;
}

inline std::vector<std::uint8_t> escaping_mask(const EscapeGrid& g) {
  std::vector<std::uint8_t> m(g.cls.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = g.cls[i] == PixelClass::Escaping ? 1 : 0;
  return m;
}

inline ConnectivityReport connectivity(const EscapeGrid& g) {
  return connectivity(escaping_mask(g), g.spec.nx, g.spec.ny);
}

/// Pixels on either side of a change between Escaping and non-escaping,
/// judged over 4-neighbours.
inline std::vector<std::uint8_t> julia_boundary(const std::vector<std::uint8_t>& escaping, std::size_t nx, std::size_t ny) {
  std::vector<std::uint8_t> b(nx * ny, 0);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      const std::size_t i = y * nx + x;
      const bool e = escaping[i] != 0;
      const bool differs = (x > 0 && (escaping[i - 1] != 0) != e) || (x + 1 < nx && (escaping[i + 1] != 0) != e) ||
                           (y > 0 && (escaping[i - nx] != 0) != e) || (y + 1 < ny && (escaping[i + nx] != 0) != e);
      b[i] = differs ? 1 : 0;
    }
  }
  return b;
}

inline std::vector<std::uint8_t> julia_boundary(const EscapeGrid& g) {
  return julia_boundary(escaping_mask(g), g.spec.nx, g.spec.ny);
}

}  // namespace escape_lab
