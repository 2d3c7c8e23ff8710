#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "ckm/error.hpp"
#include "ckm/rng.hpp"

namespace ckm {

using Combination = std::vector<std::uint32_t>;

inline constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

/// Binomial coefficient, saturating at kSaturated.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) {
    return 0;
  }
  r = std::min(r, n - r);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * (n - r + i) / i;
    if (acc > kSaturated) {
      return kSaturated;
    }
  }
  return static_cast<std::uint64_t>(acc);
}

/// Stream of size-m index combinations drawn from a pool of `pool` items.
/// When the budget covers every combination they come out in lexicographic
/// order; otherwise `budget` distinct combinations are drawn uniformly.
class SubsetSource {
 public:
  SubsetSource(std::size_t pool, std::size_t m, std::optional<std::uint64_t> budget, RngStream& rng)
      : pool_(pool), m_(m) {
    if (m == 0) {
      throw InvalidArgument("subset size must be positive");
    }
    if (pool < m) {
      throw InvalidArgument("multiset has fewer points than the subset size");
    }
    if (budget && *budget == 0) {
      throw InvalidArgument("subset budget must be positive");
    }
    const std::uint64_t total = binomial(pool, m);
    if (!budget || *budget >= total) {
      exhaustive_ = true;
      count_ = total;
      cursor_.resize(m);
      std::iota(cursor_.begin(), cursor_.end(), 0u);
      return;
    }
    count_ = *budget;
    draw_distinct(total, rng);
  }

  bool exhaustive() const { return exhaustive_; }
  /// Number of combinations this source yields (saturated when astronomical).
  std::uint64_t count() const { return count_; }

  bool next(Combination& out) {
    if (exhaustive_) {
      if (done_) {
        return false;
      }
      out = cursor_;
      advance();
      return true;
    }
    if (emitted_ == count_) {
      return false;
    }
    const auto* first = &sampled_[emitted_ * m_];
    out.assign(first, first + m_);
    ++emitted_;
    return true;
  }

 private:
  void advance() {
    // Rightmost position that can still move forward.
    std::size_t i = m_;
    while (i > 0) {
      --i;
      if (cursor_[i] != pool_ - m_ + i) {
        ++cursor_[i];
        for (std::size_t j = i + 1; j < m_; ++j) {
          cursor_[j] = cursor_[j - 1] + 1;
        }
        return;
      }
    }
    done_ = true;
  }

  void draw_distinct(std::uint64_t total, RngStream& rng) {
    sampled_.reserve(count_ * m_);
    // Small spaces: list everything and take a uniform prefix of a shuffle.
    if (total <= 4 * count_ && total <= (1u << 22)) {
      std::vector<std::uint32_t> all;
      all.reserve(total * m_);
      Combination c(m_);
      std::iota(c.begin(), c.end(), 0u);
      cursor_ = c;
      while (!done_) {
        all.insert(all.end(), cursor_.begin(), cursor_.end());
        advance();
      }
      done_ = false;
      std::vector<std::uint64_t> order(total);
      std::iota(order.begin(), order.end(), 0);
      for (std::uint64_t i = 0; i < count_; ++i) {
        std::swap(order[i], order[i + rng.below(total - i)]);
        const auto* first = &all[order[i] * m_];
        sampled_.insert(sampled_.end(), first, first + m_);
      }
      return;
    }
    std::size_t capacity = 16;
    while (capacity < 2 * count_) {
      capacity <<= 1;
    }
    std::vector<std::int64_t> table(capacity, -1);
    Combination c(m_);
    std::uint64_t stored = 0;
    while (stored < count_) {
      draw_one(c, rng);
      std::uint64_t h = 0x84222325cbf29ce4ULL;
      for (auto v : c) {
        h = (h ^ v) * 0x100000001b3ULL;
      }
      std::size_t slot = static_cast<std::size_t>(h) & (capacity - 1);
      bool duplicate = false;
      while (table[slot] >= 0) {
        const auto* other = &sampled_[static_cast<std::size_t>(table[slot]) * m_];
        if (std::equal(c.begin(), c.end(), other)) {
          duplicate = true;
          break;
        }
        slot = (slot + 1) & (capacity - 1);
      }
      if (duplicate) {
        continue;
      }
      table[slot] = static_cast<std::int64_t>(stored);
      sampled_.insert(sampled_.end(), c.begin(), c.end());
      ++stored;
    }
  }

  // Floyd's algorithm: a uniform m-subset of [0, pool), then sorted.
  void draw_one(Combination& c, RngStream& rng) const {
    std::size_t filled = 0;
    for (std::size_t j = pool_ - m_; j < pool_; ++j) {
      const auto t = static_cast<std::uint32_t>(rng.below(j + 1));
      const bool seen = std::find(c.begin(), c.begin() + filled, t) != c.begin() + filled;
      c[filled++] = seen ? static_cast<std::uint32_t>(j) : t;
    }
    std::sort(c.begin(), c.end());
  }

  std::size_t pool_;
  std::size_t m_;
  bool exhaustive_ = false;
  bool done_ = false;
  std::uint64_t count_ = 0;
  std::uint64_t emitted_ = 0;
  Combination cursor_;
  std::vector<std::uint32_t> sampled_;
};

/// Convenience wrapper that materializes every combination of the source.
inline std::vector<Combination> enumerate_subsets(std::size_t pool, std::size_t m,
                                                  std::optional<std::uint64_t> budget, RngStream& rng) {
  SubsetSource src(pool, m, budget, rng);
  std::vector<Combination> out;
  Combination c;
  while (src.next(c)) {
    out.push_back(c);
  }
  return out;
}

}  // namespace ckm
