#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace commentloop::corpus {

inline constexpr double kMaxAvgLineLength = 100.0;
inline constexpr std::size_t kMaxLineLength = 1000;
inline constexpr double kMinAlnumFraction = 0.25;
inline constexpr int kAutogenScanLines = 5;
inline constexpr double kMinRatio = 0.30;
inline constexpr double kMaxRatio = 0.95;
inline constexpr std::size_t kMinDocTokens = 3;
inline constexpr std::size_t kMaxDocTokens = 256;
inline constexpr double kMinEnglishFraction = 0.90;

enum class Rule { avg_line_len, max_line_len, alnum_frac, autogen_keyword, ratio_low, ratio_high, empty_code };

std::string_view to_string(Rule r);

struct FileVerdict {
    std::string path;
    bool kept = true;
    std::vector<Rule> reasons;
    std::optional<double> ratio;
};

nlohmann::json to_json(const FileVerdict& v);

struct LineCounts {
    std::size_t comment_lines = 0;
    std::size_t code_lines = 0;

    /// Empty when there are no code lines.
    std::optional<double> ratio() const;
};

/// Counts comment lines (line comments and docstring lines) and remaining non-blank code lines.
LineCounts comment_ratio(std::string_view text);

/// Applies the file filters and the comment-ratio window. Lengths count code points.
FileVerdict filter_file(std::string_view text, std::string path);

struct CodeCommentPair {
    std::string doc;
    std::string code;
    std::string source;

    friend bool operator==(const CodeCommentPair&, const CodeCommentPair&) = default;
};

nlohmann::json to_json(const CodeCommentPair& p);

/// Comment runs paired with the statement or header directly below; function docstrings paired
/// with the function header.
std::vector<CodeCommentPair> extract_pairs(std::string_view text, std::string_view path);

bool doc_token_count_ok(std::string_view doc);
bool has_special_tokens(std::string_view doc);
bool is_english(std::string_view doc);
/// Parses a statement or a lone compound header (given a placeholder suite).
bool code_parses(std::string_view code);

std::vector<CodeCommentPair> clean_pairs(std::vector<CodeCommentPair> pairs);

/// Python files under `dir`, sorted by path.
std::vector<std::filesystem::path> python_files(const std::filesystem::path& dir);

std::vector<FileVerdict> filter_directory(const std::filesystem::path& dir, unsigned workers = 0);

/// Pairs from kept files only, cleaned, in path order.
std::vector<CodeCommentPair> extract_directory(const std::filesystem::path& dir, unsigned workers = 0);

std::string read_file(const std::filesystem::path& path);

}  // namespace commentloop::corpus
