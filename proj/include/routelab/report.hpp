// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0
//
// Report emission for demo and study bundles. Tabular output is a set of CSV
// files with header rows; structured output is one JSON document. Plot-data
// files (x, y, series) are written in both modes. Emission is byte-stable.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "routelab/demo.hpp"
#include "routelab/study.hpp"

namespace routelab {

enum class ReportFormat { kTabular, kStructured };

ReportFormat report_format_from_string(const std::string& name);

/// One (x, y, series) triple of a plot-data file.
struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  std::string series;
};

void write_plot_data(std::ostream& out, std::span<const PlotPoint> points);

void write_correlation_table(std::ostream& out, std::span<const CorrelationReport> rows);
void write_checkpoint_table(std::ostream& out, std::span<const CheckpointMetrics> rows);
void write_study_table(std::ostream& out, const StudyResult& result);
void write_study_summary(std::ostream& out, const StudyResult& result);

/// Writes the demo report into `dir` (created if missing) and returns the
/// written file names in write order. Throws ValidationError when `dir` cannot
/// be written.
std::vector<std::string> emit_report(const DemoBundle& bundle, const std::filesystem::path& dir, ReportFormat format);

std::vector<std::string> emit_study_report(const StudyConfig& config, const StudyResult& result,
                                           const std::filesystem::path& dir, ReportFormat format);

}  // namespace routelab
