#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace causeprobe::verdicts {

enum class Answer { Yes, No, Meta, Unclassified };
enum class Source { Auto, Manual };

std::string_view to_string(Answer a);
std::string_view to_string(Source s);
// Case-insensitive "yes" | "no" | "meta" | "unclassified".
std::optional<Answer> answer_from_string(std::string_view text);
std::optional<Source> source_from_string(std::string_view text);

struct Verdict {
  Answer value = Answer::Unclassified;
  Source source = Source::Auto;
  std::string raw;
  // "prefix:yes", "prefix:no", "meta:<phrase>", "manual", or empty.
  std::string rule;

  bool operator==(const Verdict&) const = default;
};

const std::vector<std::string>& default_meta_phrases();

struct ClassifierConfig {
  std::vector<std::string> meta_phrases = default_meta_phrases();
};

// Leading whitespace, quotes and list markers removed.
std::string_view strip_leading_noise(std::string_view text);

// Total and deterministic. A "yes"/"no" word at the start (case-insensitive,
// followed by a non-alphanumeric character or the end) decides; otherwise the
// first meta phrase found anywhere (case-insensitive) gives Meta; otherwise
// Unclassified.
Verdict classify(std::string_view text, const ClassifierConfig& cfg = {});

// ---------------------------------------------------------------------------
// Manual labeling.

struct VerdictRecord {
  std::string id;  // "<dataset>:t<template>:<i>><j>" for probes
  std::string dataset;
  int template_id = 0;
  std::string cause;
  std::string effect;
  std::string prompt;
  Verdict verdict;

  bool operator==(const VerdictRecord&) const = default;
};

// Tab-separated; see docs/labels.md. Writes every Unclassified record and
// returns how many. The file is written even when empty.
std::size_t export_label_queue(const std::vector<VerdictRecord>& records,
                               const std::filesystem::path& path);

struct LabelRow {
  std::size_t line = 0;
  std::string id;
  std::string label;  // as typed; empty when left blank
};

std::vector<LabelRow> read_label_file(const std::filesystem::path& path);

// Applies labeled rows; blank labels are skipped. ValidationError naming the
// row for unknown ids, labels outside yes/no/meta, or rows that target an
// automatically classified answer. Returns the number of records changed.
std::size_t import_labels(const std::filesystem::path& path, std::vector<VerdictRecord>& records);

// ---------------------------------------------------------------------------
// Grading against a yes/no gold answer.

enum class Grade { Correct, Incorrect, Abstained, Pending };

std::string_view to_string(Grade g);

// Meta is Incorrect unless abstentions are scored separately; Unclassified is
// Pending until labeled.
Grade grade(const Verdict& v, bool gold, bool score_abstentions = false);

}  // namespace causeprobe::verdicts
