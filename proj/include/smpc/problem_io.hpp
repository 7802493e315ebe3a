/*
 Copyright 2026 The smpc authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef SMPC_PROBLEM_IO_HPP_
#define SMPC_PROBLEM_IO_HPP_

#include <optional>
#include <string>
#include <vector>

#include "smpc/mcsim.hpp"

namespace smpc {

/// Raised on malformed problem files; the message names the field.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Terminal-set flavor: the maximal positively invariant polytope, or the
/// tightened base constraints alone (what the reference study effectively
/// used; see README discussion of the benchmark's feasible region).
enum class TerminalSetKind { kInvariant, kTightenedBase };

/// Parsed problem file: everything needed to synthesize and simulate.
struct ProblemFile {
  Matrix a, b;
  Matrix vw;
  Matrix q, r;
  int horizon = 8;
  std::vector<ChanceConstraint> constraints;
  Tightening tightening = Tightening::kGaussian;
  VarianceMode variance_mode = VarianceMode::kInterpolated;
  TerminalSetKind terminal_set = TerminalSetKind::kInvariant;
  SimConfig sim;
};

ProblemFile load_problem(const std::string& path);

/// Synthesis output: gains, terminal set and variance offsets at full
/// precision, suitable for byte-exact re-ingestion.
struct SynthArtifact {
  GainSet gains;
  Polytope z_f;
  std::vector<Matrix> variance_offsets;  // h[0..n]
  double riccati_residual = 0.0;
  double lyapunov_residual = 0.0;
};

SynthArtifact synthesize_problem(const ProblemFile& problem);

void save_artifact(const SynthArtifact& artifact, const std::string& path);
SynthArtifact load_artifact(const std::string& path, const ProblemFile& problem);

OcpSpec make_ocp_spec(const ProblemFile& problem, const SynthArtifact& artifact);

/// CSV with one row per (run, t), full double precision.
void write_trace_csv(const std::string& path, const OcpSpec& spec,
                     const std::vector<SimTrace>& traces);

/// Structured-text (JSON) report mirroring McReport.
void write_report(const std::string& path, const OcpSpec& spec,
                  const SimConfig& config, const McReport& report);

std::string format_full(double v);

}  // namespace smpc

#endif  // SMPC_PROBLEM_IO_HPP_
