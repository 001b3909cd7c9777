#pragma once

#include <stdexcept>
#include <string>

namespace acctune {

// Base of every error raised by the library. Subtypes exist so the CLI can
// map failure domains to exit codes without matching message text.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad or contradictory run configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Source scanning failures. The file is considered unscannable.
struct ScanError : Error {
  using Error::Error;
};
struct UnbalancedBraces : ScanError {
  using ScanError::ScanError;
};
struct UnterminatedLiteral : ScanError {
  using ScanError::ScanError;
};

// Genome length does not match the candidate set of the run.
struct GenomeLengthMismatch : Error {
  using Error::Error;
};

// Probing left no loop to tune.
struct NoCandidates : Error {
  using Error::Error;
};

// The compile or benchmark command itself cannot be executed
// (shell reported "command not found").
struct ToolchainMissing : Error {
  using Error::Error;
};

struct NonPositiveTime : Error {
  using Error::Error;
};

// Evaluation workspace cannot be created or written.
struct WorkdirUnwritable : Error {
  using Error::Error;
};

// A time regex is configured but the benchmark output never matched it.
struct TimePatternNotFound : Error {
  using Error::Error;
};

// Every individual ended up with zero selection weight; the run cannot
// proceed.
struct ZeroTotalFitness : Error {
  using Error::Error;
};

// The evaluator cannot produce a usable baseline measurement.
struct EvaluatorUnavailable : Error {
  using Error::Error;
};

// Synthetic cost model problems.
struct ModelError : Error {
  using Error::Error;
};
struct ModelGenomeMismatch : ModelError {
  using ModelError::ModelError;
};
struct GeneLengthTooLarge : ModelError {
  using ModelError::ModelError;
};
// Raised by model_time for genomes listed in the model's fail set; the
// evaluator turns it into a CompileError outcome.
struct SimulatedCompileError : ModelError {
  using ModelError::ModelError;
};

// Run directory lacks the logs a report needs.
struct MissingLog : Error {
  using Error::Error;
};

}  // namespace acctune
