#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "amgenc/charge.hpp"
#include "amgenc/egnn.hpp"
#include "amgenc/errors.hpp"
#include "amgenc/io_formats.hpp"
#include "amgenc/projection.hpp"
#include "amgenc/rng.hpp"
#include "amgenc/sampler.hpp"
#include "amgenc/structure_analysis.hpp"
#include "amgenc/weights.hpp"

namespace amgenc::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct GenerationOptions {
  std::string table;
  std::string weights;
  bool teacher = false;
  std::string teacher_target;
  bool random_weights = false;
  std::string config;
  std::string out_dir;
  std::string save_weights;
  std::string target;
  int n_samples = 1;
  int jobs = 1;
  double edge = 18.0;
  double n_norm = 40.0;
  EgnnConfig egnn;
  std::optional<std::uint64_t> weight_seed;

  GenerationConfig cfg;
  CLI::Option *steps = nullptr, *sigma = nullptr, *tau = nullptr, *rho = nullptr,
              *r_cut = nullptr, *target_opt = nullptr, *seed = nullptr;
  int steps_value = 100;
  double sigma_value = 0.25, tau_value = 0.13, rho_value = 0.11, r_cut_value = 6.5;
  std::uint64_t seed_value = 0;
};

void add_generation_options(CLI::App *cmd, GenerationOptions &o) {
  cmd->add_option("--table", o.table, "Charge table file")->required()->check(CLI::ExistingFile);
  auto *weights =
      cmd->add_option("--weights", o.weights, "Network weight file")->check(CLI::ExistingFile);
  auto *teacher = cmd->add_flag("--teacher", o.teacher,
                                "Drive generation with the exact linear-path field toward a "
                                "random charge-balanced target");
  auto *teacher_target = cmd->add_option("--teacher-target", o.teacher_target,
                                         "Extended XYZ target for --teacher (sets cell and size)")
                             ->check(CLI::ExistingFile);
  auto *random = cmd->add_flag("--random-weights", o.random_weights,
                               "Use a randomly initialized network");
  weights->excludes(teacher)->excludes(random);
  teacher->excludes(random);
  teacher_target->needs(teacher);

  cmd->add_option("--config", o.config, "Run configuration file (key = value)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--n-samples", o.n_samples, "Number of samples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  o.steps = cmd->add_option("--steps", o.steps_value, "Euler steps T")->check(CLI::PositiveNumber);
  o.sigma = cmd->add_option("--sigma", o.sigma_value, "Element noise scale")
                ->check(CLI::PositiveNumber);
  o.tau = cmd->add_option("--tau", o.tau_value, "Softmax temperature")->check(CLI::PositiveNumber);
  o.rho = cmd->add_option("--rho", o.rho_value, "Atom slots per cubic Angstrom")
              ->check(CLI::PositiveNumber);
  o.r_cut = cmd->add_option("--r-cut", o.r_cut_value, "Neighbor cutoff in Angstrom")
                ->check(CLI::PositiveNumber);
  o.target_opt = cmd->add_option("--target", o.target, "Target property vector \"v1,v2,...\"");
  o.seed = cmd->add_option("--seed", o.seed_value, "Random seed (falls back to AMGENC_SEED)");
  cmd->add_option("--edge", o.edge, "Cubic cell edge in Angstrom")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "Parallel samples")->check(CLI::PositiveNumber);

  cmd->add_option("--layers", o.egnn.layers, "Network depth (random weights)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--hidden", o.egnn.hidden_dim, "Hidden width (random weights)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--channels", o.egnn.vector_channels, "Vector channels (random weights)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--attention", o.egnn.attention_dim, "Attention width (random weights)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--nnorm", o.n_norm, "Message normalization")->check(CLI::PositiveNumber);
  cmd->add_option("--weight-seed", o.weight_seed, "Seed for --random-weights (default: --seed)");
  cmd->add_option("--save-weights", o.save_weights, "Write the network weights used");
}

std::uint64_t env_seed() {
  const char *raw = std::getenv("AMGENC_SEED");
  if (!raw || !*raw)
    return 0;
  char *end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (*end != '\0' || raw[0] == '-')
    throw UsageError(std::string("AMGENC_SEED is not a non-negative integer: '") + raw + "'");
  return v;
}

// environment < config file < flags
GenerationConfig resolve_config(const GenerationOptions &o) {
  GenerationConfig cfg;
  cfg.seed = env_seed();
  if (!o.config.empty()) {
    try {
      cfg = load_run_config(o.config, cfg);
    } catch (const ParseError &e) {
      throw UsageError(o.config + ": " + e.what());
    }
  }
  if (*o.steps)
    cfg.steps = o.steps_value;
  if (*o.sigma)
    cfg.sigma = o.sigma_value;
  if (*o.tau)
    cfg.tau = o.tau_value;
  if (*o.rho)
    cfg.max_density = o.rho_value;
  if (*o.r_cut)
    cfg.r_cut = o.r_cut_value;
  if (*o.seed)
    cfg.seed = o.seed_value;
  if (*o.target_opt) {
    try {
      cfg.target = parse_real_list(o.target);
    } catch (const ValidationError &e) {
      throw UsageError(std::string("--target: ") + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ValidationError &e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct Generation {
  ElementTable table;
  GenerationConfig cfg;
  std::vector<GenerationResult> results;
};

Generation run_generation(GenerationOptions &o, std::ostream &err) {
  if (o.weights.empty() && !o.teacher && !o.random_weights)
    throw UsageError("one of --weights, --teacher or --random-weights is required");
  GenerationConfig cfg = resolve_config(o);
  ElementTable table = load_charge_table(o.table);

  std::optional<Lattice> lattice;
  std::optional<MaterialSample> fixed_target;
  if (!o.teacher_target.empty()) {
    fixed_target = load_extxyz(o.teacher_target, table);
    lattice = fixed_target->lattice();
  } else {
    lattice = Lattice::cubic(o.edge);
  }
  const int n_atoms = fixed_target ? fixed_target->atom_count()
                                   : ghost_padded_count(*lattice, cfg.max_density);
  if (n_atoms <= 0)
    throw UsageError("cell volume and density leave no atom slots");

  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(o.n_samples));
  for (std::size_t i = 0; i < seeds.size(); ++i)
    seeds[i] = derive_seed(cfg.seed, streams::kSample, i);

  std::vector<std::unique_ptr<VelocityField>> fields;
  if (o.teacher) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      MaterialSample target = fixed_target ? *fixed_target
                                           : random_balanced_target(table, *lattice, n_atoms,
                                                                    seeds[i]);
      fields.push_back(std::make_unique<TeacherField>(std::move(target), table.size()));
    }
  } else {
    WeightContainer weights;
    EgnnConfig ecfg;
    if (!o.weights.empty()) {
      weights = load_weights(o.weights);
      ecfg = infer_egnn_config(weights, cfg.r_cut, o.n_norm);
    } else {
      ecfg = o.egnn;
      ecfg.r_cut = cfg.r_cut;
      ecfg.n_norm = o.n_norm;
      ecfg.n_elements = table.size();
      ecfg.n_y = cfg.target.empty() ? 1 : static_cast<int>(cfg.target.size());
      weights = init_egnn_weights(ecfg, o.weight_seed.value_or(cfg.seed));
    }
    if (ecfg.n_elements != table.size())
      throw ValidationError("network predicts " + std::to_string(ecfg.n_elements) +
                            " element classes but the table has " +
                            std::to_string(table.size()));
    if (cfg.target.empty())
      cfg.target.assign(static_cast<std::size_t>(ecfg.n_y), 0.0);
    if (static_cast<int>(cfg.target.size()) != ecfg.n_y)
      throw UsageError("--target has " + std::to_string(cfg.target.size()) +
                       " values, the network expects " + std::to_string(ecfg.n_y));
    if (!o.save_weights.empty())
      save_weights(o.save_weights, weights);
    fields.push_back(std::make_unique<EgnnField>(EgnnModel(ecfg, weights)));
  }

  std::vector<const VelocityField *> per_seed(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i)
    per_seed[i] = fields.size() == 1 ? fields[0].get() : fields[i].get();

  err << "generating " << seeds.size() << " sample(s), " << n_atoms << " atom slots, T="
      << cfg.steps << "\n";
  Generation gen{std::move(table), cfg, {}};
  if (fixed_target) {
    // the atom count comes from the target, not the density
    for (std::size_t i = 0; i < seeds.size(); ++i)
      gen.results.push_back(generate(cfg, gen.table, *lattice, n_atoms, *per_seed[i], seeds[i]));
  } else {
    gen.results = generate_batch(cfg, gen.table, *lattice, per_seed, seeds, o.jobs);
  }
  return gen;
}

ChargeReport report_charges(const Generation &gen, std::ostream &err) {
  std::vector<Assignments> batch;
  batch.reserve(gen.results.size());
  for (const auto &r : gen.results)
    batch.push_back(r.sample.assignments());
  const ChargeReport report = charge_metrics(batch, gen.table);
  err << "samples\t" << batch.size() << "\n"
      << "atom_slots\t" << gen.results.front().trace.atom_slots << "\n"
      << "P(Q=0)\t" << fixed(100.0 * report.p_balanced, 1) << "%\n"
      << "|mean Q|\t" << report.mean_abs_charge << "\n"
      << "sigma_Q\t" << report.std_charge << "\n";
  return report;
}

int cmd_generate(GenerationOptions &o, std::ostream &, std::ostream &err) {
  Generation gen = run_generation(o, err);
  fs::create_directories(o.out_dir);
  for (std::size_t i = 0; i < gen.results.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "sample_%04zu.xyz", i);
    save_extxyz((fs::path(o.out_dir) / name).string(), gen.results[i].sample, gen.table);
  }
  std::ofstream traces(fs::path(o.out_dir) / "traces.tsv");
  if (!traces)
    throw Error("cannot write traces table in '" + o.out_dir + "'");
  write_trace_header(traces);
  for (std::size_t i = 0; i < gen.results.size(); ++i)
    write_trace(traces, gen.results[i].trace, static_cast<int>(i));
  const ChargeReport report = report_charges(gen, err);
  return report.p_balanced == 1.0 ? kOk : kRuntimeError;
}

int cmd_trace(GenerationOptions &o, std::ostream &out, std::ostream &err) {
  Generation gen = run_generation(o, err);
  write_trace_header(out);
  for (std::size_t i = 0; i < gen.results.size(); ++i)
    write_trace(out, gen.results[i].trace, static_cast<int>(i));
  const ChargeReport report = report_charges(gen, err);
  return report.p_balanced == 1.0 ? kOk : kRuntimeError;
}

struct ProjectOptions {
  std::string in, logits, table, out;
};

int cmd_project(const ProjectOptions &o, std::ostream &out, std::ostream &err) {
  const ElementTable table = load_charge_table(o.table);
  const MaterialSample structure = load_extxyz(o.in, table);
  const std::string logits_path = o.logits.empty() ? o.in + ".logits" : o.logits;
  std::ifstream logits_in(logits_path);
  if (!logits_in)
    throw UsageError("logits sidecar '" + logits_path + "' not found");
  const Logits logits = read_logits_table(logits_in);
  if (logits.rows() != structure.atom_count() || logits.cols() != table.size())
    throw ShapeMismatch("logits are " + std::to_string(logits.rows()) + "x" +
                        std::to_string(logits.cols()) + ", expected " +
                        std::to_string(structure.atom_count()) + "x" +
                        std::to_string(table.size()));

  const long before = hard_charge_from_logits(logits, table);
  DiscreteRepair repair;
  try {
    repair = discrete_project(logits, table);
  } catch (const InfeasibleRepair &e) {
    err << "error: " << e.what() << "\n"
        << "nearest achievable charge: " << e.nearest_charge() << "\n";
    return kInfeasible;
  }
  out << "charge_before\t" << before << "\n";
  out << "swaps\t" << repair.swaps.size() << "\n";
  for (const Swap &s : repair.swaps)
    out << s.atom << "\t" << table.names()[s.from] << "\t" << table.names()[s.to] << "\n";
  out << "cost\t" << fixed(repair.total_cost, 10) << "\n";
  out << "charge_after\t" << hard_charge(repair.assignments, table) << "\n";
  if (!o.out.empty())
    save_extxyz(o.out,
                MaterialSample(structure.lattice(), structure.positions(), repair.assignments),
                table);
  return kOk;
}

struct AnalyzeOptions {
  std::string in, table;
  std::vector<std::string> rdf, cn;
  bool rings = false;
  bool charge = false;
  std::string concentration;
  std::string ring_element = "Si";
  int max_ring = 12;
  double rmax = 0.0;
  int bins = 200;
  double bond_factor = 1.3;
};

std::pair<int, int> species_pair(const std::string &spec, const ElementTable &table) {
  const auto dash = spec.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == spec.size())
    throw UsageError("species pair must look like A-B, got '" + spec + "'");
  auto lookup = [&](const std::string &s) {
    if (auto idx = table.index_of(s))
      return *idx;
    throw UsageError("unknown element '" + s + "'");
  };
  return {lookup(spec.substr(0, dash)), lookup(spec.substr(dash + 1))};
}

int cmd_analyze(const AnalyzeOptions &o, std::ostream &out, std::ostream &) {
  const ElementTable table = load_charge_table(o.table);
  const MaterialSample sample = load_extxyz(o.in, table);
  const double rmax = o.rmax > 0.0 ? o.rmax : 0.5 * sample.lattice().min_width();
  const bool nothing_requested =
      o.rdf.empty() && o.cn.empty() && !o.rings && o.concentration.empty();

  if (o.charge || nothing_requested)
    out << "charge\t" << hard_charge(sample.assignments(), table) << "\n";
  for (const std::string &spec : o.rdf) {
    const auto [a, b] = species_pair(spec, table);
    out << "# g(r) " << spec << "\n";
    write_radial_table(out, partial_rdf(sample, a, b, rmax, o.bins));
  }
  for (const std::string &spec : o.cn) {
    const auto [a, b] = species_pair(spec, table);
    const auto cn = cumulative_cn(sample, a, b, rmax, o.bins);
    if (!cn)
      throw ValidationError("no " + table.names()[a] + " atoms in the structure");
    out << "# n(r) " << spec << "\n";
    write_radial_table(out, *cn);
  }
  if (o.rings) {
    const auto counted = table.index_of(o.ring_element);
    if (!counted)
      throw UsageError("unknown element '" + o.ring_element + "'");
    const BondGraph graph = build_bond_graph(sample, table, o.bond_factor);
    const RingStatistics stats = ring_statistics(graph, sample.assignments(), *counted, o.max_ring);
    out << "rings\t" << stats.rings.size() << "\n";
    out << "mean_ring_size\t" << (stats.mean_size ? fixed(*stats.mean_size) : "nan") << "\n";
    for (const auto &[size, count] : stats.histogram)
      out << "ring_size\t" << size << "\t" << count << "\n";
  }
  if (!o.concentration.empty()) {
    const auto idx = table.index_of(o.concentration);
    if (!idx)
      throw UsageError("unknown element '" + o.concentration + "'");
    out << fixed(molar_concentration(sample.assignments(), table, *idx)) << "\n";
  }
  return kOk;
}

std::vector<double> read_values(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (char &c : text)
    if (c == ',' || c == '\n' || c == '\r' || c == '\t')
      c = ' ';
  std::vector<double> values;
  std::istringstream ss(text);
  std::string token;
  while (ss >> token) {
    if (token.front() == '#') {
      std::getline(ss, token);
      continue;
    }
    try {
      values.push_back(parse_real_list(token).at(0));
    } catch (const ValidationError &) {
      throw ValidationError(path + ": cannot parse '" + token + "' as a number");
    }
  }
  return values;
}

int cmd_metrics(const std::string &targets_path, const std::string &generated_path,
                std::ostream &out) {
  const auto targets = read_values(targets_path);
  const auto generated = read_values(generated_path);
  const RegressionReport r = regression_metrics(targets, generated);
  out << "MAE\t" << fixed(r.mae) << "\n"
      << "RMSE\t" << fixed(r.rmse) << "\n"
      << "MAPE\t" << fixed(r.mape) << "%\n";
  return kOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Charge-balanced amorphous structure generation"};
  app.name("amgenc");
  app.require_subcommand(1, 1);

  GenerationOptions gen_opts, trace_opts;
  auto *generate_cmd = app.add_subcommand("generate", "Generate structures");
  add_generation_options(generate_cmd, gen_opts);
  generate_cmd->add_option("--out-dir", gen_opts.out_dir, "Output directory")->required();

  auto *trace_cmd = app.add_subcommand("trace", "Print per-step charge traces");
  add_generation_options(trace_cmd, trace_opts);

  ProjectOptions project_opts;
  auto *project_cmd = app.add_subcommand("project", "Repair element logits to zero charge");
  project_cmd->add_option("--in", project_opts.in, "Extended XYZ structure")
      ->required()
      ->check(CLI::ExistingFile);
  project_cmd->add_option("--logits", project_opts.logits, "Logits table (default <in>.logits)");
  project_cmd->add_option("--table", project_opts.table, "Charge table file")
      ->required()
      ->check(CLI::ExistingFile);
  project_cmd->add_option("--out", project_opts.out, "Write the repaired structure");

  AnalyzeOptions analyze_opts;
  auto *analyze_cmd = app.add_subcommand("analyze", "Structure analysis");
  analyze_cmd->add_option("--in", analyze_opts.in, "Extended XYZ structure")
      ->required()
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--table", analyze_opts.table, "Charge table file")
      ->required()
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--rdf", analyze_opts.rdf, "Partial g(r) for a pair A-B");
  analyze_cmd->add_option("--cn", analyze_opts.cn, "Cumulative coordination for a pair A-B");
  analyze_cmd->add_flag("--rings", analyze_opts.rings, "Ring statistics");
  analyze_cmd->add_option("--ring-element", analyze_opts.ring_element,
                          "Element counted per ring")
      ->capture_default_str();
  analyze_cmd->add_option("--max-ring", analyze_opts.max_ring, "Largest ring size searched")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze_cmd->add_option("--bond-factor", analyze_opts.bond_factor,
                          "Bond cutoff as a multiple of summed covalent radii")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze_cmd->add_option("--concentration", analyze_opts.concentration,
                          "Molar fraction of an element");
  analyze_cmd->add_flag("--charge", analyze_opts.charge, "Print the total formal charge");
  analyze_cmd->add_option("--rmax", analyze_opts.rmax, "Radial range (default half cell width)")
      ->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--bins", analyze_opts.bins, "Radial bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::string targets_path, generated_path;
  auto *metrics_cmd = app.add_subcommand("metrics", "MAE, RMSE and MAPE");
  metrics_cmd->add_option("--targets", targets_path, "Target values")
      ->required()
      ->check(CLI::ExistingFile);
  metrics_cmd->add_option("--generated", generated_path, "Generated values")
      ->required()
      ->check(CLI::ExistingFile);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*generate_cmd)
      return cmd_generate(gen_opts, out, err);
    if (*trace_cmd)
      return cmd_trace(trace_opts, out, err);
    if (*project_cmd)
      return cmd_project(project_opts, out, err);
    if (*analyze_cmd)
      return cmd_analyze(analyze_opts, out, err);
    if (*metrics_cmd)
      return cmd_metrics(targets_path, generated_path, out);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const InfeasibleRepair &e) {
    err << "error: " << e.what() << "\n"
        << "nearest achievable charge: " << e.nearest_charge() << "\n";
    return kInfeasible;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

} // namespace amgenc::cli
