#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "metatask/eval.hpp"

namespace metatask {

/// CSV with header "algo,train_regime,p_hard,mean_acc,ci_low,ci_high,n_tasks"
/// and fixed 6-decimal formatting. Rejects empty reports.
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);

EvalReport read_report_csv(const std::filesystem::path& path);

/// Self-contained SVG: accuracy vs hard-task probability, one curve per
/// (algo, train_regime) with a shaded 95% CI band. Axes are labelled
/// "hard-task probability" and "mean accuracy". The optional comment (e.g. a
/// config hash) is embedded as an XML comment.
void write_report_svg(const EvalReport& report, const std::filesystem::path& path,
                      const std::optional<std::string>& comment = std::nullopt);

}  // namespace metatask
