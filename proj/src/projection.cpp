#include "amgenc/projection.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "amgenc/charge.hpp"
#include "amgenc/errors.hpp"

namespace amgenc {

ProjectionOutcome gauss_newton_step(const Logits &logits, const ElementTable &table, double tau) {
  ProjectionOutcome out;
  out.residual_charge_before = hard_charge_from_logits(logits, table);
  if (out.residual_charge_before == 0) {
    out.corrected_logits = logits;
    return out;
  }
  const Logits grad = soft_charge_gradient(logits, tau, table);
  out.gradient_norm_sq = grad.squaredNorm();
  if (!(out.gradient_norm_sq >= 1e-12)) {
    std::ostringstream msg;
    msg << "soft-charge gradient vanished (|g|^2 = " << out.gradient_norm_sq << ") with Q = "
        << out.residual_charge_before;
    throw VanishingGradient(msg.str());
  }
  const double scale = static_cast<double>(out.residual_charge_before) / out.gradient_norm_sq;
  out.corrected_logits = logits - scale * grad;
  return out;
}

Logits reinterpolate(const Logits &e0, const Logits &e1_proj, double t_next) {
  if (e0.rows() != e1_proj.rows() || e0.cols() != e1_proj.cols())
    throw ShapeMismatch("re-interpolation endpoints differ in shape");
  if (!(t_next >= 0.0 && t_next <= 1.0))
    throw ValidationError("re-interpolation time must lie in [0, 1]");
  return (1.0 - t_next) * e0 + t_next * e1_proj;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest total charge reachable by any reassignment; only used to report
// infeasibility.
long nearest_reachable_charge(const Assignments &current, long charge, const ElementTable &table) {
  const auto &c = table.charges();
  long lo = 0, hi = 0;
  std::vector<char> reach{1};
  for (int e : current) {
    long dmin = 0, dmax = 0;
    for (int cj : c) {
      dmin = std::min<long>(dmin, cj - c[e]);
      dmax = std::max<long>(dmax, cj - c[e]);
    }
    std::vector<char> next(static_cast<std::size_t>(hi + dmax - lo - dmin + 1), 0);
    for (long q = lo; q <= hi; ++q) {
      if (!reach[static_cast<std::size_t>(q - lo)])
        continue;
      for (int cj : c)
        next[static_cast<std::size_t>(q + cj - c[e] - lo - dmin)] = 1;
    }
    lo += dmin;
    hi += dmax;
    reach.swap(next);
  }
  long best = charge;
  bool found = false;
  for (long q = lo; q <= hi; ++q) {
    if (!reach[static_cast<std::size_t>(q - lo)])
      continue;
    const long total = charge + q;
    if (!found || std::labs(total) < std::labs(best) ||
        (std::labs(total) == std::labs(best) && total < best)) {
      best = total;
      found = true;
    }
  }
  return best;
}

} // namespace

DiscreteRepair discrete_project(const Logits &logits, const ElementTable &table) {
  if (logits.cols() != table.size())
    throw ShapeMismatch("logit width does not match the element table");
  if (table.size() > 255)
    throw ValidationError("discrete projection supports at most 255 element types");

  const int n = static_cast<int>(logits.rows());
  const int d = table.size();
  const auto &c = table.charges();

  DiscreteRepair repair;
  repair.assignments = argmax_assignments(logits);
  const Assignments &current = repair.assignments;
  const long charge = hard_charge(current, table);
  if (charge == 0)
    return repair;

  const long target = -charge;
  const int c_min = *std::min_element(c.begin(), c.end());
  const int c_max = *std::max_element(c.begin(), c.end());

  // suffix_lo[i], suffix_hi[i]: charge shift reachable by atoms i..n-1
  std::vector<long> suffix_lo(n + 1, 0), suffix_hi(n + 1, 0);
  for (int i = n - 1; i >= 0; --i) {
    suffix_lo[i] = suffix_lo[i + 1] + (c_min - c[current[i]]);
    suffix_hi[i] = suffix_hi[i + 1] + (c_max - c[current[i]]);
  }
  if (target < suffix_lo[0] || target > suffix_hi[0]) {
    std::ostringstream msg;
    msg << "no reassignment balances charge " << charge;
    throw InfeasibleRepair(msg.str(), nearest_reachable_charge(current, charge, table));
  }

  // Layer i holds the states after atoms 0..i-1, restricted to the window
  // that is both reachable from 0 and can still reach the target.
  struct Layer {
    long lo;
    std::vector<std::uint8_t> choice; // element picked for atom i-1
  };
  std::vector<Layer> layers(static_cast<std::size_t>(n));

  long prev_lo = 0, prefix_lo = 0, prefix_hi = 0;
  std::vector<double> prev{0.0}, cur;
  std::vector<double> swap_cost(d);
  std::vector<long> delta(d);

  for (int i = 0; i < n; ++i) {
    const int e = current[i];
    prefix_lo += c_min - c[e];
    prefix_hi += c_max - c[e];
    const long lo = std::max(prefix_lo, target - suffix_hi[i + 1]);
    const long hi = std::min(prefix_hi, target - suffix_lo[i + 1]);
    const std::size_t width = static_cast<std::size_t>(hi - lo + 1);

    cur.assign(width, kInf);
    Layer &layer = layers[static_cast<std::size_t>(i)];
    layer.lo = lo;
    layer.choice.assign(width, 0);

    const auto row = logits.row(i);
    for (int j = 0; j < d; ++j) {
      swap_cost[j] = row[e] - row[j];
      delta[j] = c[j] - c[e];
    }

    const long prev_hi = prev_lo + static_cast<long>(prev.size()) - 1;
    for (int j = 0; j < d; ++j) {
      // q in [prev_lo, prev_hi] with q + delta in [lo, hi]
      const long q_begin = std::max(prev_lo, lo - delta[j]);
      const long q_end = std::min(prev_hi, hi - delta[j]);
      if (q_begin > q_end)
        continue;
      const double s = swap_cost[j];
      const double *src = prev.data() + (q_begin - prev_lo);
      double *dst = cur.data() + (q_begin + delta[j] - lo);
      std::uint8_t *pick = layer.choice.data() + (q_begin + delta[j] - lo);
      const long count = q_end - q_begin + 1;
      for (long k = 0; k < count; ++k) {
        const double cand = src[k] + s;
        if (cand < dst[k]) {
          dst[k] = cand;
          pick[k] = static_cast<std::uint8_t>(j);
        }
      }
    }
    prev.swap(cur);
    prev_lo = lo;
  }

  // After the last atom the window is exactly {target}.
  const double best = prev.size() == 1 && prev_lo == target ? prev[0] : kInf;
  if (best == kInf) {
    std::ostringstream msg;
    msg << "no reassignment balances charge " << charge;
    throw InfeasibleRepair(msg.str(), nearest_reachable_charge(current, charge, table));
  }

  Assignments chosen(current);
  long q = target;
  for (int i = n - 1; i >= 0; --i) {
    const Layer &layer = layers[static_cast<std::size_t>(i)];
    const int j = layer.choice[static_cast<std::size_t>(q - layer.lo)];
    chosen[i] = j;
    q -= c[j] - c[current[i]];
  }

  for (int i = 0; i < n; ++i)
    if (chosen[i] != current[i])
      repair.swaps.push_back({i, current[i], chosen[i]});
  repair.assignments = std::move(chosen);
  repair.total_cost = best;
  return repair;
}

} // namespace amgenc
