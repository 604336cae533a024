#pragma once

#include <vector>

#include "amgenc/core_types.hpp"

namespace amgenc {

/// Batch charge-balance statistics over N samples.
struct ChargeReport {
  double p_balanced = 0.0;      ///< fraction of samples with Q == 0
  double mean_abs_charge = 0.0; ///< |mean Q|
  double std_charge = 0.0;      ///< population standard deviation of Q
  std::vector<long> per_sample;
};

/// Sum of formal charges. Throws InvalidElement on an out-of-range index.
long hard_charge(const Assignments &assignments, const ElementTable &table);

/// Row-wise argmax, lowest index winning ties.
Assignments argmax_assignments(const Logits &logits);

long hard_charge_from_logits(const Logits &logits, const ElementTable &table);

/// Row-wise softmax(logits / tau), max-subtracted.
Logits softmax_rows(const Logits &logits, double tau);

/// Differentiable total charge: sum_i softmax(row_i / tau) . c
double soft_charge(const Logits &logits, double tau, const ElementTable &table);

/// Exact gradient of soft_charge:
///   dQ/dE_ij = p_ij (c_j - p_i . c) / tau
Logits soft_charge_gradient(const Logits &logits, double tau, const ElementTable &table);

/// Throws EmptyBatch on an empty batch.
ChargeReport charge_metrics(const std::vector<Assignments> &batch, const ElementTable &table);
ChargeReport charge_metrics_from_values(const std::vector<long> &charges);

} // namespace amgenc
