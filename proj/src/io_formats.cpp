#include "amgenc/io_formats.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>

#include "amgenc/errors.hpp"

namespace amgenc {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r'))
      ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r')
      ++j;
    if (j > i)
      out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    return std::nullopt;
  return v;
}

std::optional<long long> to_integer(std::string_view s) {
  long long v = 0;
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    return std::nullopt;
  return v;
}

double finite_real(std::string_view token, std::size_t line, const char *what) {
  auto v = to_double(token);
  if (!v)
    throw ParseError(std::string("expected a number for ") + what + ", got '" +
                         std::string(token) + "'",
                     line);
  if (!std::isfinite(*v))
    throw ParseError(std::string("non-finite ") + what, line);
  return *v;
}

// key=value pairs of an extended XYZ comment line; values may be quoted
std::map<std::string, std::string> parse_key_values(std::string_view line, std::size_t line_no) {
  std::map<std::string, std::string> kv;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
      ++i;
    if (i >= line.size())
      break;
    std::size_t key_end = i;
    while (key_end < line.size() && line[key_end] != '=' && line[key_end] != ' ' &&
           line[key_end] != '\t')
      ++key_end;
    std::string key(line.substr(i, key_end - i));
    if (key_end >= line.size() || line[key_end] != '=') {
      kv[key] = "T"; // bare flag
      i = key_end;
      continue;
    }
    std::size_t v = key_end + 1;
    std::string value;
    if (v < line.size() && (line[v] == '"' || line[v] == '\'')) {
      const char quote = line[v];
      const auto close = line.find(quote, v + 1);
      if (close == std::string_view::npos)
        throw ParseError("unterminated quote in header value for '" + key + "'", line_no);
      value = std::string(line.substr(v + 1, close - v - 1));
      i = close + 1;
    } else {
      std::size_t end = v;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t')
        ++end;
      value = std::string(line.substr(v, end - v));
      i = end;
    }
    kv[key] = value;
  }
  return kv;
}

struct PropertyLayout {
  std::size_t species_column = 0;
  std::size_t pos_column = 1;
  std::size_t width = 4;
};

PropertyLayout parse_properties(const std::string &spec, std::size_t line_no) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':'))
    parts.push_back(item);
  if (parts.size() % 3 != 0)
    throw ParseError("malformed Properties specification", line_no);
  PropertyLayout layout;
  bool have_species = false, have_pos = false;
  std::size_t column = 0;
  for (std::size_t p = 0; p < parts.size(); p += 3) {
    auto count = to_integer(parts[p + 2]);
    if (!count || *count < 1)
      throw ParseError("bad column count in Properties", line_no);
    if (parts[p] == "species") {
      if (parts[p + 1] != "S" || *count != 1)
        throw ParseError("species must be declared as species:S:1", line_no);
      layout.species_column = column;
      have_species = true;
    } else if (parts[p] == "pos") {
      if (parts[p + 1] != "R" || *count != 3)
        throw ParseError("pos must be declared as pos:R:3", line_no);
      layout.pos_column = column;
      have_pos = true;
    }
    column += static_cast<std::size_t>(*count);
  }
  if (!have_species || !have_pos)
    throw ParseError("Properties must include species and pos", line_no);
  layout.width = column;
  return layout;
}

bool next_line(std::istream &in, std::string &line, std::size_t &line_no) {
  if (!std::getline(in, line))
    return false;
  ++line_no;
  return true;
}

std::string format_real(double v, int digits = 12) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

} // namespace

void write_extxyz(std::ostream &out, const MaterialSample &sample, const ElementTable &table,
                  bool include_ghosts) {
  const auto &elements = sample.assignments();
  std::size_t count = 0;
  for (int e : elements) {
    if (e < 0 || e >= table.size())
      throw InvalidElement("element index out of range");
    count += include_ghosts || !table.is_ghost(e);
  }
  out << count << '\n';
  const Mat3 &rows = sample.lattice().rows();
  out << "Lattice=\"";
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      out << (r || c ? " " : "") << format_real(rows(r, c), 15);
  out << "\" Properties=species:S:1:pos:R:3 pbc=\"T T T\"\n";
  const Positions &x = sample.positions();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (!include_ghosts && table.is_ghost(elements[i]))
      continue;
    const auto r = static_cast<Eigen::Index>(i);
    out << table.names()[elements[i]] << ' ' << format_real(x(r, 0), 15) << ' '
        << format_real(x(r, 1), 15) << ' ' << format_real(x(r, 2), 15) << '\n';
  }
}

MaterialSample read_extxyz(std::istream &in, const ElementTable &table) {
  std::string line;
  std::size_t line_no = 0;
  if (!next_line(in, line, line_no))
    throw ParseError("missing atom count", 1);
  const auto count = to_integer(trim(line));
  if (!count || *count < 0)
    throw ParseError("first line must hold a non-negative atom count", line_no);

  if (!next_line(in, line, line_no))
    throw ParseError("missing comment line", line_no + 1);
  const auto kv = parse_key_values(line, line_no);
  const auto lattice_it = kv.find("Lattice");
  if (lattice_it == kv.end())
    throw ParseError("comment line has no Lattice entry", line_no);
  const auto lattice_tokens = split_ws(lattice_it->second);
  if (lattice_tokens.size() != 9)
    throw ParseError("Lattice must hold 9 numbers", line_no);
  Mat3 rows;
  for (int k = 0; k < 9; ++k)
    rows(k / 3, k % 3) = finite_real(lattice_tokens[k], line_no, "lattice entry");
  PropertyLayout layout;
  if (auto it = kv.find("Properties"); it != kv.end())
    layout = parse_properties(it->second, line_no);

  std::optional<Lattice> lattice;
  try {
    lattice.emplace(rows);
  } catch (const DegenerateLattice &e) {
    throw ParseError(e.what(), line_no);
  }

  const auto n = static_cast<Eigen::Index>(*count);
  Positions x(n, 3);
  Assignments elements(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!next_line(in, line, line_no))
      throw ParseError("expected " + std::to_string(n) + " atom lines, file ends after " +
                           std::to_string(i),
                       line_no + 1);
    const auto tokens = split_ws(line);
    if (tokens.size() != layout.width)
      throw ParseError("expected " + std::to_string(layout.width) + " columns, got " +
                           std::to_string(tokens.size()),
                       line_no);
    const std::string symbol(tokens[layout.species_column]);
    const auto idx = table.index_of(symbol);
    if (!idx)
      throw ParseError("unknown element symbol '" + symbol + "'", line_no);
    elements[static_cast<std::size_t>(i)] = *idx;
    for (int k = 0; k < 3; ++k)
      x(i, k) = finite_real(tokens[layout.pos_column + k], line_no, "coordinate");
  }
  return MaterialSample(*lattice, std::move(x), std::move(elements));
}

void save_extxyz(const std::string &path, const MaterialSample &sample, const ElementTable &table,
                 bool include_ghosts) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot open '" + path + "' for writing");
  write_extxyz(out, sample, table, include_ghosts);
}

MaterialSample load_extxyz(const std::string &path, const ElementTable &table) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open '" + path + "'");
  return read_extxyz(in, table);
}

ElementTable parse_charge_table(std::istream &in) {
  std::vector<std::string> names;
  std::vector<int> charges;
  std::vector<double> freqs, radii;
  std::optional<int> ghost;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos)
      body = body.substr(0, hash);
    const auto tokens = split_ws(body);
    if (tokens.empty())
      continue;
    if (tokens.size() != 4 && tokens.size() != 5)
      throw ParseError("expected: symbol charge frequency radius [ghost]", line_no);
    const std::string symbol(tokens[0]);
    for (const auto &existing : names)
      if (existing == symbol)
        throw ValidationError("duplicate element symbol '" + symbol + "' on line " +
                              std::to_string(line_no));
    const auto charge = to_integer(tokens[1]);
    if (!charge)
      throw ParseError("formal charge must be an integer", line_no);
    const double freq = finite_real(tokens[2], line_no, "frequency");
    const double radius = finite_real(tokens[3], line_no, "covalent radius");
    if (tokens.size() == 5) {
      if (tokens[4] != "ghost")
        throw ParseError("unknown flag '" + std::string(tokens[4]) + "'", line_no);
      if (ghost)
        throw ValidationError("more than one ghost row");
      ghost = static_cast<int>(names.size());
    }
    names.push_back(symbol);
    charges.push_back(static_cast<int>(*charge));
    freqs.push_back(freq);
    radii.push_back(radius);
  }
  double sum = 0.0;
  for (double f : freqs)
    sum += f;
  if (names.empty())
    throw ValidationError("charge table has no rows");
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "frequencies sum to " << sum << ", expected 1";
    throw ValidationError(msg.str());
  }
  for (double &f : freqs)
    f /= sum;
  // division can leave the sum a few ulps away from 1; fold it into the largest entry
  double renormalized = 0.0;
  for (double f : freqs)
    renormalized += f;
  auto largest = std::max_element(freqs.begin(), freqs.end());
  *largest += 1.0 - renormalized;
  return ElementTable(std::move(names), std::move(charges), std::move(freqs), ghost,
                      std::move(radii));
}

ElementTable load_charge_table(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open charge table '" + path + "'");
  return parse_charge_table(in);
}

void write_charge_table(std::ostream &out, const ElementTable &table) {
  out << "# symbol charge frequency radius [ghost]\n";
  for (int j = 0; j < table.size(); ++j) {
    out << table.names()[j] << ' ' << table.charges()[j] << ' '
        << format_real(table.frequencies()[j]) << ' '
        << format_real(table.has_radii() ? table.covalent_radii()[j] : 0.0);
    if (table.is_ghost(j))
      out << " ghost";
    out << '\n';
  }
}

Logits read_logits_table(std::istream &in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos)
      body = body.substr(0, hash);
    const auto tokens = split_ws(body);
    if (tokens.empty())
      continue;
    std::vector<double> row;
    row.reserve(tokens.size());
    for (auto tok : tokens)
      row.push_back(finite_real(tok, line_no, "logit"));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("logit rows differ in length", line_no);
    rows.push_back(std::move(row));
  }
  Logits out(static_cast<Eigen::Index>(rows.size()),
             rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

void write_logits_table(std::ostream &out, const Logits &logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j)
      out << (j ? " " : "") << format_real(logits(i, j), 17);
    out << '\n';
  }
}

std::vector<double> parse_real_list(const std::string &text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = to_double(trim(item));
    if (!v || !std::isfinite(*v))
      throw ValidationError("cannot parse '" + item + "' as a real number");
    values.push_back(*v);
  }
  return values;
}

GenerationConfig parse_run_config(std::istream &in, GenerationConfig cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (next_line(in, line, line_no)) {
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos)
      body = body.substr(0, hash);
    body = trim(body);
    if (body.empty())
      continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("expected 'key = value'", line_no);
    const std::string key(trim(body.substr(0, eq)));
    const std::string_view value = trim(body.substr(eq + 1));
    auto integer = [&]() {
      auto v = to_integer(value);
      if (!v)
        throw ParseError("'" + key + "' needs an integer", line_no);
      return *v;
    };
    if (key == "steps") {
      cfg.steps = static_cast<int>(integer());
    } else if (key == "seed") {
      const auto v = integer();
      if (v < 0)
        throw ParseError("seed must be non-negative", line_no);
      cfg.seed = static_cast<std::uint64_t>(v);
    } else if (key == "sigma") {
      cfg.sigma = finite_real(value, line_no, "sigma");
    } else if (key == "tau") {
      cfg.tau = finite_real(value, line_no, "tau");
    } else if (key == "r_cut") {
      cfg.r_cut = finite_real(value, line_no, "r_cut");
    } else if (key == "max_density" || key == "rho") {
      cfg.max_density = finite_real(value, line_no, "max_density");
    } else if (key == "target") {
      try {
        cfg.target = parse_real_list(std::string(value));
      } catch (const ValidationError &e) {
        throw ParseError(e.what(), line_no);
      }
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }
  return cfg;
}

GenerationConfig load_run_config(const std::string &path, GenerationConfig base) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open run config '" + path + "'");
  return parse_run_config(in, std::move(base));
}

void write_run_config(std::ostream &out, const GenerationConfig &cfg) {
  out << "steps = " << cfg.steps << '\n'
      << "sigma = " << format_real(cfg.sigma) << '\n'
      << "tau = " << format_real(cfg.tau) << '\n'
      << "r_cut = " << format_real(cfg.r_cut) << '\n'
      << "max_density = " << format_real(cfg.max_density) << '\n'
      << "target = ";
  for (std::size_t i = 0; i < cfg.target.size(); ++i)
    out << (i ? "," : "") << format_real(cfg.target[i]);
  out << '\n' << "seed = " << cfg.seed << '\n';
}

} // namespace amgenc
