#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

// Plain breadth-first recount: 4-connected escaping components, 8-connected
// complement components that never reach the border.
struct Recount {
  std::size_t pixels = 0, components = 0, holes = 0, largest = 0;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, std::size_t>> boxes;
};

inline Recount brute_force(const std::vector<std::uint8_t>& m, std::size_t nx, std::size_t ny) {
  Recount out;
  std::vector<int> seen(m.size(), 0);
  auto at = [&](long x, long y) { return static_cast<std::size_t>(y) * nx + static_cast<std::size_t>(x); };
  for (long y0 = 0; y0 < static_cast<long>(ny); ++y0) {
    for (long x0 = 0; x0 < static_cast<long>(nx); ++x0) {
      const std::size_t s = at(x0, y0);
      if (seen[s]) continue;
      const bool esc = m[s] != 0;
      std::deque<std::pair<long, long>> q{{x0, y0}};
      seen[s] = 1;
      std::size_t size = 0, bx0 = nx, by0 = ny, bx1 = 0, by1 = 0;
      bool border = false;
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        ++size;
        bx0 = std::min<std::size_t>(bx0, x);
        bx1 = std::max<std::size_t>(bx1, x);
        by0 = std::min<std::size_t>(by0, y);
        by1 = std::max<std::size_t>(by1, y);
        if (x == 0 || y == 0 || x + 1 == static_cast<long>(nx) || y + 1 == static_cast<long>(ny)) border = true;
        for (long dy = -1; dy <= 1; ++dy) {
          for (long dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (esc && dx != 0 && dy != 0) continue;
            const long xx = x + dx, yy = y + dy;
            if (xx < 0 || yy < 0 || xx >= static_cast<long>(nx) || yy >= static_cast<long>(ny)) continue;
            const std::size_t j = at(xx, yy);
            if (seen[j] || (m[j] != 0) != esc) continue;
            seen[j] = 1;
            q.push_back({xx, yy});
          }
        }
      }
      if (esc) {
        out.pixels += size;
        ++out.components;
        out.largest = std::max(out.largest, size);
      } else if (!border) {
        ++out.holes;
        out.boxes.emplace_back(bx0, by0, bx1, by1, size);
      }
    }
  }
  std::sort(out.boxes.begin(), out.boxes.end());
  return out;
}

}  // namespace oracle
