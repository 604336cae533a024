#pragma once

#include <iosfwd>
#include <string>

#include "amgenc/core_types.hpp"

namespace amgenc {

/// Extended XYZ, single frame:
///   <n>
///   Lattice="ax ay az bx by bz cx cy cz" Properties=species:S:1:pos:R:3 pbc="T T T"
///   <symbol> <x> <y> <z>
/// Lattice and positions are written with 15 significant digits. Ghost atoms are
/// skipped unless include_ghosts is set.
void write_extxyz(std::ostream &out, const MaterialSample &sample, const ElementTable &table,
                  bool include_ghosts = false);

/// Reads one frame into an assignments sample. Unknown per-atom properties
/// are skipped. Throws ParseError carrying the offending line number.
MaterialSample read_extxyz(std::istream &in, const ElementTable &table);

void save_extxyz(const std::string &path, const MaterialSample &sample, const ElementTable &table,
                 bool include_ghosts = false);
MaterialSample load_extxyz(const std::string &path, const ElementTable &table);

/// Whitespace-separated charge table, one element per line:
///   <symbol> <charge> <frequency> <covalent radius> [ghost]
/// '#' starts a comment. Frequencies must sum to 1 within 1e-9 and are
/// renormalized. Throws ParseError or ValidationError.
ElementTable parse_charge_table(std::istream &in);
ElementTable load_charge_table(const std::string &path);
void write_charge_table(std::ostream &out, const ElementTable &table);

/// Whitespace-separated matrix, one atom per line, written with 17
/// significant digits so values read back exactly.
Logits read_logits_table(std::istream &in);
void write_logits_table(std::ostream &out, const Logits &logits);

/// `key = value` lines mirroring GenerationConfig (steps, sigma, tau,
/// r_cut, max_density, target, seed). Values not present keep the fields
/// of `base`. Unknown keys are a ParseError.
GenerationConfig parse_run_config(std::istream &in, GenerationConfig base = {});
GenerationConfig load_run_config(const std::string &path, GenerationConfig base = {});
void write_run_config(std::ostream &out, const GenerationConfig &cfg);

/// Parses "v1,v2,..." into reals. Throws ValidationError.
std::vector<double> parse_real_list(const std::string &text);

} // namespace amgenc
