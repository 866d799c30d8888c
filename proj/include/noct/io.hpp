#pragma once

#include <string>
#include <utility>
#include <vector>

#include "noct/observability.hpp"
#include "noct/system.hpp"

namespace noct::io {

/// A parsed model file: the system (with its unconditional constraints) and
/// any named constraint sets that can be selected on top.
struct ModelFile {
  AffineControlSystem system;
  std::vector<std::pair<std::string, std::vector<Constraint>>> constraint_sets;

  /// Copy of the system with the named set appended to its constraints.
  AffineControlSystem with_constraints(const std::string& set) const;
};

/// Throws ModelError on malformed JSON, schema violations or bad expressions.
ModelFile parse_model(const std::string& text);
ModelFile read_model(const std::string& path);

/// Serializes a system in the model-file schema, two-space indented.
std::string dump_model(const AffineControlSystem& sys, const ModelFile* extra_sets = nullptr);

struct ReportSettings {
  int points = 0;
  int max_order = 0;
  std::uint64_t seed = 0;
  std::string model;
  std::string constraints;
};

std::string dump_report(const ObservabilityReport& rep, const ReportSettings& settings);

/// {"vectors": [[expr, ...], ...]}
std::vector<std::vector<Expr>> parse_vectors(const std::string& text);
std::vector<std::vector<Expr>> read_vectors(const std::string& path);
std::string dump_vectors(const std::vector<std::vector<Expr>>& vectors);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace noct::io
