#include "amgenc/sampler.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "amgenc/charge.hpp"
#include "amgenc/element_noise.hpp"
#include "amgenc/errors.hpp"

namespace amgenc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

FlowState flow_interpolate(const Positions &x0, const Positions &x1, const Logits &e0,
                           const Logits &e1, double t, const Lattice &lattice) {
  if (x0.rows() != x1.rows() || e0.rows() != e1.rows() || e0.cols() != e1.cols() ||
      x0.rows() != e0.rows())
    throw ShapeMismatch("flow endpoints differ in shape");
  if (!(t >= 0.0 && t <= 1.0))
    throw ValidationError("flow time must lie in [0, 1]");
  FlowState state;
  state.t = t;
  state.x0 = x0;
  state.e0 = e0;
  state.x_t.resize(x0.rows(), 3);
  for (Eigen::Index i = 0; i < x0.rows(); ++i) {
    const Vec3 a = x0.row(i).transpose();
    const Vec3 v = min_image_displacement(a, x1.row(i).transpose(), lattice);
    state.x_t.row(i) = lattice.wrap(a + t * v).transpose();
  }
  state.e_t = e0 + t * (e1 - e0);
  return state;
}

double fm_loss(const VelocityOutput &predicted, const Positions &target_vx,
               const Logits &target_ve) {
  if (predicted.v_pos.rows() != target_vx.rows() || predicted.v_el.rows() != target_ve.rows() ||
      predicted.v_el.cols() != target_ve.cols())
    throw ShapeMismatch("velocity shapes differ");
  return (predicted.v_pos - target_vx).squaredNorm() + (predicted.v_el - target_ve).squaredNorm();
}

GenerationResult generate(const GenerationConfig &cfg, const ElementTable &table,
                          const Lattice &lattice, const VelocityField &field,
                          std::uint64_t rng_seed) {
  cfg.validate();
  const int n_atoms = ghost_padded_count(lattice, cfg.max_density);
  if (n_atoms <= 0)
    throw InvalidSize("density and cell volume leave no atom slots");
  return generate(cfg, table, lattice, n_atoms, field, rng_seed);
}

GenerationResult generate(const GenerationConfig &cfg, const ElementTable &table,
                          const Lattice &lattice, int n_atoms, const VelocityField &field,
                          std::uint64_t rng_seed) {
  cfg.validate();
  if (!(cfg.r_cut < 0.5 * lattice.min_width())) {
    std::ostringstream msg;
    msg << "cutoff " << cfg.r_cut << " A is not below half the minimum cell width ("
        << 0.5 * lattice.min_width() << " A)";
    throw CutoffExceedsCell(msg.str());
  }
  const auto start = Clock::now();

  NoiseDraw noise = sample_noise(n_atoms, table, lattice, cfg.sigma, rng_seed);
  FlowState state;
  state.t = 0.0;
  state.x0 = noise.positions;
  state.e0 = std::move(noise.element_logits);
  state.x_t = state.x0;
  state.e_t = state.e0;

  GenerationTrace trace;
  trace.atom_slots = n_atoms;
  trace.steps.reserve(static_cast<std::size_t>(cfg.steps));
  const double dt = 1.0 / cfg.steps;
  const std::span<const double> target(cfg.target);
  Logits clean;

  for (int step = 0; step < cfg.steps; ++step) {
    state.t = static_cast<double>(step) / cfg.steps;
    const double t_next = static_cast<double>(step + 1) / cfg.steps;

    const VelocityOutput v = field(lattice, state, target);
    if (v.v_pos.rows() != n_atoms || v.v_el.rows() != n_atoms || v.v_el.cols() != table.size())
      throw ShapeMismatch("velocity field returned the wrong shape");

    state.x_t = wrap_positions(lattice, state.x_t + dt * v.v_pos);
    clean = state.e_t + (1.0 - state.t) * v.v_el;

    TraceStep record;
    record.t = state.t;
    record.charge = hard_charge_from_logits(clean, table);
    if (record.charge != 0) {
      try {
        ProjectionOutcome outcome = gauss_newton_step(clean, table, cfg.tau);
        const Logits grad = soft_charge_gradient(clean, cfg.tau, table);
        record.projected = true;
        record.gradient_norm_sq = outcome.gradient_norm_sq;
        record.first_order_residual =
            (grad.array() * (outcome.corrected_logits - clean).array()).sum() +
            static_cast<double>(record.charge);
        clean = std::move(outcome.corrected_logits);
      } catch (const VanishingGradient &) {
        // the final discrete repair still enforces the constraint
        record.vanishing_gradient = true;
      }
    }
    trace.steps.push_back(record);
    state.e_t = reinterpolate(state.e0, clean, t_next);
  }
  state.t = 1.0;

  const auto repair_start = Clock::now();
  DiscreteRepair repair = discrete_project(state.e_t, table);
  const double repair_seconds = seconds_since(repair_start);

  trace.charge_before_repair = hard_charge_from_logits(state.e_t, table);
  trace.repair_cost = repair.total_cost;
  trace.repair_swaps = repair.swaps.size();

  Positions kept(n_atoms, 3);
  Assignments kept_elements;
  kept_elements.reserve(static_cast<std::size_t>(n_atoms));
  for (int i = 0; i < n_atoms; ++i) {
    const int e = repair.assignments[static_cast<std::size_t>(i)];
    if (table.is_ghost(e)) {
      ++trace.ghost_atoms;
      continue;
    }
    kept.row(static_cast<Eigen::Index>(kept_elements.size())) = state.x_t.row(i);
    kept_elements.push_back(e);
  }
  kept.conservativeResize(static_cast<Eigen::Index>(kept_elements.size()), 3);

  GenerationResult result{MaterialSample(lattice, std::move(kept), std::move(kept_elements)),
                          std::move(trace), std::move(state.e_t), std::move(repair.assignments),
                          {}};
  result.timing.repair_seconds = repair_seconds;
  result.timing.total_seconds = seconds_since(start);
  return result;
}

std::vector<GenerationResult> generate_batch(const GenerationConfig &cfg, const ElementTable &table,
                                             const Lattice &lattice, const VelocityField &field,
                                             std::span<const std::uint64_t> seeds, int jobs) {
  const std::vector<const VelocityField *> fields(seeds.size(), &field);
  return generate_batch(cfg, table, lattice, fields, seeds, jobs);
}

std::vector<GenerationResult> generate_batch(const GenerationConfig &cfg, const ElementTable &table,
                                             const Lattice &lattice,
                                             std::span<const VelocityField *const> fields,
                                             std::span<const std::uint64_t> seeds, int jobs) {
  if (fields.size() != seeds.size())
    throw ShapeMismatch("one velocity field per seed is required");
  std::vector<std::optional<GenerationResult>> slots(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        slots[i] = generate(cfg, table, lattice, *fields[i], seeds[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::current_exception();
        next = seeds.size();
        return;
      }
    }
  };

  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int k = 0; k < threads; ++k)
      pool.emplace_back(worker);
  }
  if (failure)
    std::rethrow_exception(failure);

  std::vector<GenerationResult> results;
  results.reserve(seeds.size());
  for (auto &slot : slots)
    results.push_back(std::move(*slot));
  return results;
}

void write_trace_header(std::ostream &out) {
  out << "sample\tstep\tt\tcharge\tabs_charge\tprojected\tgrad_norm_sq\n";
}

void write_trace(std::ostream &out, const GenerationTrace &trace, int sample_id) {
  char buf[160];
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const TraceStep &step = trace.steps[s];
    std::snprintf(buf, sizeof buf, "%d\t%zu\t%.6f\t%ld\t%ld\t%d\t%.10g\n", sample_id, s, step.t,
                  step.charge, std::labs(step.charge), step.projected ? 1 : 0,
                  step.gradient_norm_sq);
    out << buf;
  }
}

} // namespace amgenc
