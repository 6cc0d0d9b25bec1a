#pragma once

// Exact sequential Bernoulli GLR detector with functional pruning.
//
// Each side (change upward or downward in the success rate) keeps the set of
// candidate changepoints whose log-likelihood-ratio curve is optimal for at
// least one post-change rate on that side. A candidate is stored as the pair
// of counts (ones, zeros) observed since it was introduced; its start time is
// recovered as n - (a + b). Pruning uses only ratios of counts, so no root
// finding is ever performed.
//
// All statistics are on the deviance scale (twice the log-likelihood ratio).

#include <cassert>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>

#include "errors.hpp"

namespace npfocus {

namespace detail {

// x * log(x / total) with the 0 * log 0 := 0 convention.
inline double xlog_fraction(std::int64_t x, std::int64_t total) {
    if (x == 0) {
        return 0.0;
    }
    return static_cast<double>(x) * std::log(static_cast<double>(x) / static_cast<double>(total));
}

inline void check_rate(double theta, const char* name) {
    if (!(theta > 0.0 && theta < 1.0)) {
        throw invalid_input(std::string(name) + " must lie strictly inside (0, 1)");
    }
}

}  // namespace detail

/// Twice the maximised Bernoulli log-likelihood of a segment with the given
/// counts (saturated fit).
inline double saturated_deviance(std::int64_t ones, std::int64_t zeros) {
    const std::int64_t total = ones + zeros;
    if (total == 0) {
        return 0.0;
    }
    return 2.0 * (detail::xlog_fraction(ones, total) + detail::xlog_fraction(zeros, total));
}

/// Single-observation log-likelihood ratio of rate `theta` against `theta0`.
inline double g_value(bool x, double theta, double theta0) {
    if (x) {
        return 2.0 * std::log(theta / theta0);
    }
    return 2.0 * std::log((1.0 - theta) / (1.0 - theta0));
}

/// One candidate changepoint. `a` counts observations in the side's direction
/// (ones on the up side, zeros on the down side), `b` the others. `c` is the
/// doubled prefix log-likelihood at introduction time; it is only used by the
/// unknown-baseline detector and stays 0 otherwise.
struct Piece {
    std::int64_t a = 0;
    std::int64_t b = 0;
    double c = 0.0;

    std::int64_t length() const { return a + b; }
    double ratio() const { return length() == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(length()); }

    friend bool operator==(const Piece&, const Piece&) = default;
};

enum class Direction { up, down };

/// Ordered candidate set for one direction of change.
///
/// Invariants (checked by `check_invariants`):
///   - ratios a/(a+b) strictly increase from the oldest stored piece to the
///     newest;
///   - the oldest ratio exceeds the side's baseline.
/// The zero piece (candidate at the current time, counts (0, 0)) is implicit:
/// its value is always 0 and it is materialised on the next observation only
/// when that observation points in the side's direction.
class SideState {
  public:
    /// Side for a detector with known pre-change rate `theta0`.
    SideState(Direction direction, double theta0)
        : direction_(direction), theta0_(theta0), offsets_(false) {
        detail::check_rate(theta0, "theta0");
        floor_ = direction == Direction::up ? theta0 : 1.0 - theta0;
        log_floor_ = std::log(floor_);
        log_floor_complement_ = std::log1p(-floor_);
    }

    /// Side for the unknown-baseline detector: curves carry offsets and the
    /// pruning baseline is the limit 0 (up) or 1 (down).
    static SideState unknown_baseline(Direction direction) {
        SideState side(direction);
        side.offsets_ = true;
        side.floor_ = 0.0;
        return side;
    }

    Direction direction() const { return direction_; }
    /// Pre-change rate on the original (ones) scale; NaN for the unknown-baseline variant.
    double theta0() const { return theta0_; }
    bool has_offsets() const { return offsets_; }
    /// Baseline in the side's own frame (theta0 on the up side, 1 - theta0 on the down side).
    double frame_baseline() const { return floor_; }

    const std::deque<Piece>& pieces() const { return pieces_; }
    std::size_t size() const { return pieces_.size(); }

    /// Cumulative number of ratio comparisons made by pruning.
    std::uint64_t comparisons() const { return comparisons_; }

    /// Advance by one raw observation `x`. `fresh_offset` is the offset of the
    /// candidate introduced at the previous time (unknown-baseline only).
    void update(bool x, double fresh_offset = 0.0) {
        const bool toward = direction_ == Direction::up ? x : !x;
        for (Piece& p : pieces_) {
            if (toward) {
                ++p.a;
            } else {
                ++p.b;
            }
        }
        prune_and_insert(toward, fresh_offset);
#ifndef NDEBUG
        assert(check_invariants());
#endif
    }

    /// Maximum of a piece's curve over this side's range of post-change rates.
    double piece_max(const Piece& p) const {
        if (p.length() == 0) {
            return offsets_ ? p.c : 0.0;
        }
        if (offsets_) {
            return p.c + saturated_deviance(p.a, p.b);
        }
        const double r = p.ratio();
        if (r <= floor_) {
            return 0.0;
        }
        double value = static_cast<double>(p.a) * (std::log(r) - log_floor_);
        if (p.b > 0) {
            value += static_cast<double>(p.b) * (std::log1p(-r) - log_floor_complement_);
        }
        return 2.0 * value;
    }

    bool check_invariants() const {
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const Piece& p = pieces_[i];
            if (p.a < 0 || p.b < 0 || p.length() == 0) {
                return false;
            }
            if (i == 0 && !above_floor(p)) {
                return false;
            }
            if (i > 0 && !ratio_less(pieces_[i - 1], p)) {
                return false;
            }
        }
        return true;
    }

    /// Rebuild from serialized pieces (oldest first). Throws if the ordering
    /// invariant does not hold.
    void assign(std::deque<Piece> pieces, std::uint64_t comparisons) {
        pieces_ = std::move(pieces);
        comparisons_ = comparisons;
        if (!check_invariants()) {
            throw invalid_input("piece list violates the ratio ordering invariant");
        }
    }

  private:
    explicit SideState(Direction direction)
        : direction_(direction), theta0_(std::numeric_limits<double>::quiet_NaN()) {}

    static bool ratio_less(const Piece& lhs, const Piece& rhs) {
        // lhs.a / lhs.len < rhs.a / rhs.len, exactly.
        return static_cast<__int128>(lhs.a) * rhs.length() < static_cast<__int128>(rhs.a) * lhs.length();
    }

    bool above_floor(const Piece& p) const { return p.ratio() > floor_; }

    // Drop the newest piece while its ratio is <= max(baseline, previous ratio).
    void prune_and_insert(bool toward, double fresh_offset) {
        if (toward) {
            // The zero piece becomes (1, 0): ratio 1 always beats the baseline.
            pieces_.push_back(Piece{1, 0, fresh_offset});
        }
        // A fresh (0, 1) piece has ratio 0 and is never stored.
        while (!pieces_.empty()) {
            ++comparisons_;
            const Piece& last = pieces_.back();
            bool drop = !above_floor(last);
            if (!drop && pieces_.size() >= 2) {
                drop = !ratio_less(pieces_[pieces_.size() - 2], last);
            }
            if (!drop) {
                break;
            }
            pieces_.pop_back();
        }
        if (!toward && pieces_.size() >= 2) {
            // Ratios only fall on an opposing observation, so the oldest
            // pieces may have sunk to the baseline.
            while (!pieces_.empty()) {
                ++comparisons_;
                if (above_floor(pieces_.front())) {
                    break;
                }
                pieces_.pop_front();
            }
        }
    }

    Direction direction_;
    double theta0_;
    bool offsets_ = false;
    double floor_ = 0.0;
    double log_floor_ = 0.0;
    double log_floor_complement_ = 0.0;
    std::deque<Piece> pieces_;
    std::uint64_t comparisons_ = 0;
};

/// Free-function form of `SideState::piece_max`.
inline double piece_max(const Piece& p, const SideState& side) { return side.piece_max(p); }

/// Two-sided Bernoulli FOCuS detector.
class BernoulliFocus {
  public:
    /// Detector for a change away from the known pre-change rate `theta0`.
    static BernoulliFocus known(double theta0) {
        return BernoulliFocus(SideState(Direction::up, theta0), SideState(Direction::down, theta0));
    }

    /// Detector for a change when neither the pre- nor post-change rate is known.
    static BernoulliFocus unknown() {
        return BernoulliFocus(SideState::unknown_baseline(Direction::up),
                              SideState::unknown_baseline(Direction::down));
    }

    bool baseline_known() const { return !up_.has_offsets(); }
    std::optional<double> theta0() const {
        if (baseline_known()) {
            return up_.theta0();
        }
        return std::nullopt;
    }

    /// Consume one observation and return the updated statistic.
    double update(bool x) {
        double fresh_offset = 0.0;
        if (!baseline_known()) {
            fresh_offset = saturated_deviance(prefix_ones_, n_ - prefix_ones_);
        }
        ++n_;
        if (x) {
            ++prefix_ones_;
        }
        up_.update(x, fresh_offset);
        down_.update(x, fresh_offset);
        refresh();
        return stat_;
    }

    double statistic() const { return stat_; }

    /// Start of the maximising segment: the change is estimated to occur right
    /// after observation `changepoint_estimate()` (0-based count of
    /// observations before the change). Ties resolve to the latest candidate.
    std::int64_t changepoint_estimate() const {
        if (!(stat_ > 0.0)) {
            throw undefined_estimate("no candidate changepoint has positive evidence");
        }
        return tau_hat_;
    }

    std::int64_t time() const { return n_; }
    std::int64_t prefix_ones() const { return prefix_ones_; }
    const SideState& up() const { return up_; }
    const SideState& down() const { return down_; }

    /// Restore internal state from serialized parts.
    void assign(std::int64_t n, std::int64_t prefix_ones, SideState up, SideState down) {
        if (n < 0 || prefix_ones < 0 || prefix_ones > n) {
            throw invalid_input("inconsistent detector counters");
        }
        if (up.has_offsets() != down.has_offsets() || up.direction() != Direction::up ||
            down.direction() != Direction::down) {
            throw invalid_input("inconsistent detector sides");
        }
        for (const SideState* side : {&up, &down}) {
            for (const Piece& p : side->pieces()) {
                if (p.length() > n) {
                    throw invalid_input("piece older than the stream");
                }
            }
        }
        n_ = n;
        prefix_ones_ = prefix_ones;
        up_ = std::move(up);
        down_ = std::move(down);
        refresh();
    }

  private:
    BernoulliFocus(SideState up, SideState down) : up_(std::move(up)), down_(std::move(down)) {}

    void refresh() {
        double best = 0.0;
        std::int64_t best_tau = n_;
        bool found = false;
        for (const SideState* side : {&up_, &down_}) {
            for (const Piece& p : side->pieces()) {
                const double v = side->piece_max(p);
                const std::int64_t tau = n_ - p.length();
                if (!found || v > best || (v == best && tau > best_tau)) {
                    best = v;
                    best_tau = tau;
                    found = true;
                }
            }
        }
        if (!baseline_known()) {
            best -= saturated_deviance(prefix_ones_, n_ - prefix_ones_);
        }
        if (!found || !(best > 0.0)) {
            stat_ = 0.0;
            tau_hat_ = n_;
        } else {
            stat_ = best;
            tau_hat_ = best_tau;
        }
    }

    SideState up_;
    SideState down_;
    std::int64_t n_ = 0;
    std::int64_t prefix_ones_ = 0;
    double stat_ = 0.0;
    std::int64_t tau_hat_ = 0;
};

}  // namespace npfocus
