#pragma once

#include "bcs/cli.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace bcs::cli {

using Json = nlohmann::ordered_json;

/// {"value": x, "flag": flag}
Json annotated(double value, const std::string& flag);

Json config_echo(const RunConfig& cfg);

/// Writes the record to `out` and, when cfg.output is set, to that file.
void emit_record(const RunConfig& cfg, const Json& record, std::ostream& out);

/// Writes text to path atomically (temporary file + rename).
void write_file(const std::string& path, const std::string& text);

int run_scan(const RunConfig& cfg, std::ostream& out);

int run_verify(const std::string& suite, const RunConfig& cfg, std::ostream& out);

}  // namespace bcs::cli
