#include "amgenc/charge.hpp"

#include <cmath>
#include <string>

#include "amgenc/errors.hpp"

namespace amgenc {

long hard_charge(const Assignments &assignments, const ElementTable &table) {
  const auto &charges = table.charges();
  long total = 0;
  for (int e : assignments) {
    if (e < 0 || e >= table.size())
      throw InvalidElement("element index " + std::to_string(e) + " out of range");
    total += charges[e];
  }
  return total;
}

Assignments argmax_assignments(const Logits &logits) {
  Assignments out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    // maxCoeff returns the first maximum, which is the tie rule we want
    logits.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

long hard_charge_from_logits(const Logits &logits, const ElementTable &table) {
  if (logits.cols() != table.size())
    throw ShapeMismatch("logit width does not match the element table");
  return hard_charge(argmax_assignments(logits), table);
}

Logits softmax_rows(const Logits &logits, double tau) {
  if (!(tau > 0.0))
    throw ValidationError("softmax temperature must be positive");
  Logits p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = ((logits.row(i).array() - m) / tau).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

double soft_charge(const Logits &logits, double tau, const ElementTable &table) {
  if (logits.cols() != table.size())
    throw ShapeMismatch("logit width does not match the element table");
  return (softmax_rows(logits, tau) * table.charge_vector()).sum();
}

Logits soft_charge_gradient(const Logits &logits, double tau, const ElementTable &table) {
  if (logits.cols() != table.size())
    throw ShapeMismatch("logit width does not match the element table");
  const Eigen::VectorXd c = table.charge_vector();
  Logits p = softmax_rows(logits, tau);
  const Eigen::VectorXd mean_charge = p * c;
  Logits grad(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    grad.row(i) = p.row(i).array() * (c.transpose().array() - mean_charge[i]) / tau;
  return grad;
}

ChargeReport charge_metrics_from_values(const std::vector<long> &charges) {
  if (charges.empty())
    throw EmptyBatch("charge metrics need at least one sample");
  ChargeReport report;
  report.per_sample = charges;
  const double n = static_cast<double>(charges.size());
  std::size_t balanced = 0;
  double sum = 0.0;
  for (long q : charges) {
    balanced += (q == 0);
    sum += static_cast<double>(q);
  }
  const double mean = sum / n;
  double var = 0.0;
  for (long q : charges)
    var += (static_cast<double>(q) - mean) * (static_cast<double>(q) - mean);
  report.p_balanced = static_cast<double>(balanced) / n;
  report.mean_abs_charge = std::abs(mean);
  report.std_charge = std::sqrt(var / n);
  return report;
}

ChargeReport charge_metrics(const std::vector<Assignments> &batch, const ElementTable &table) {
  if (batch.empty())
    throw EmptyBatch("charge metrics need at least one sample");
  std::vector<long> charges;
  charges.reserve(batch.size());
  for (const auto &a : batch)
    charges.push_back(hard_charge(a, table));
  return charge_metrics_from_values(charges);
}

} // namespace amgenc
