// model_io.hpp — text-format model files and their JSON metadata sidecar.
//
// Format: one header line
//   # n=<int> hbar=<real> k=<real> g=<real> delta=<real> gamma_cl=<real>
// then `E <index> <energy>` lines, then `B <row> <col> <value>` lines
// (upper triangle is sufficient). The sidecar `<path>.meta.json` mirrors
// the header plus seed and provenance.

#pragma once

#include "qecho/model.hpp"

#include <filesystem>

namespace qecho::model {

struct IngestError : std::runtime_error {
    IngestError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
          line_number(line) {}
    std::size_t line_number;
};

struct IngestResult {
    ParametricModel model;
    std::vector<std::string> warnings;   // e.g. symmetrization of asymmetric input
};

IngestResult ingest_model(const std::filesystem::path& path);

// Writes the model file with %.17g round-trip precision plus the sidecar.
void export_model(const std::filesystem::path& path, const ParametricModel& m);

}  // namespace qecho::model
