#include "commentloop/corpus.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "commentloop/python/parser.hpp"
#include "commentloop/source.hpp"

namespace commentloop::corpus {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kAutogenKeywords = {"auto-generated", "autogenerated", "generated by",
                                                              "do not edit"};

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return lines;
}

std::size_t code_points(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string collapse(std::string_view s) {
    std::string out;
    std::istringstream in{std::string(s)};
    for (std::string word; in >> word;) {
        if (!out.empty()) out += ' ';
        out += word;
    }
    return out;
}

template <typename F>
void for_each_stmt(const std::vector<python::Stmt>& body, F&& f) {
    for (const auto& s : body) {
        f(s, body);
        for (const auto& c : s.clauses) for_each_stmt(c.body, f);
    }
}

std::string_view docstring_body(std::string_view literal) {
    std::size_t i = 0;
    while (i < literal.size() && literal[i] != '"' && literal[i] != '\'') ++i;
    literal.remove_prefix(i);
    const std::size_t q = literal.size() >= 6 && (literal.starts_with("\"\"\"") || literal.starts_with("'''")) ? 3 : 1;
    if (literal.size() < 2 * q) return {};
    return literal.substr(q, literal.size() - 2 * q);
}

std::string first_paragraph(std::string_view body) {
    std::string out;
    bool started = false;
    for (auto line : split_lines(body)) {
        const bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
        if (blank && started) break;
        if (blank) continue;
        started = true;
        out += ' ';
        out += line;
    }
    return collapse(out);
}

std::string comment_text(std::string_view line) {
    line.remove_prefix(std::min(line.size(), line.find_first_not_of(" \t")));
    while (!line.empty() && line.front() == '#') line.remove_prefix(1);
    return collapse(line);
}

template <typename T, typename F>
std::vector<T> parallel_map(const std::vector<std::filesystem::path>& files, unsigned workers, F&& f) {
    std::vector<T> out(files.size());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, files.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next++) < files.size();) {
                    try {
                        out[i] = f(files[i]);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace

std::string_view to_string(Rule r) {
    switch (r) {
        case Rule::avg_line_len:
            return "avg-line-len";
        case Rule::max_line_len:
            return "max-line-len";
        case Rule::alnum_frac:
            return "alnum-frac";
        case Rule::autogen_keyword:
            return "autogen-keyword";
        case Rule::ratio_low:
            return "ratio-low";
        case Rule::ratio_high:
            return "ratio-high";
        case Rule::empty_code:
            return "empty-code";
    }
    return "?";
}

json to_json(const FileVerdict& v) {
    json reasons = json::array();
    for (Rule r : v.reasons) reasons.push_back(to_string(r));
    json j{{"path", v.path}, {"kept", v.kept}, {"reasons", reasons}};
    j["ratio"] = v.ratio ? json(*v.ratio) : json(nullptr);
    return j;
}

json to_json(const CodeCommentPair& p) { return json{{"doc", p.doc}, {"code", p.code}, {"source", p.source}}; }

std::optional<double> LineCounts::ratio() const {
    if (code_lines == 0) return std::nullopt;
    return static_cast<double>(comment_lines) / static_cast<double>(code_lines);
}

LineCounts comment_ratio(std::string_view text) {
    std::set<int> doc_lines;
    try {
        const python::Module module = python::parse(text);
        auto mark = [&](const std::vector<python::Stmt>& body) {
            if (!body.empty() && python::is_docstring(body.front())) {
                for (int l = body.front().span.start.line; l <= body.front().span.end.line; ++l) doc_lines.insert(l);
            }
        };
        mark(module.body);
        for_each_stmt(module.body, [&](const python::Stmt& s, const auto&) {
            if (s.kind == python::StmtKind::function_def || s.kind == python::StmtKind::class_def) {
                mark(s.clauses.front().body);
            }
        });
    } catch (const Error&) {
    }

    LineCounts counts;
    const auto lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (python::is_blank_line(lines[i])) continue;
        if (python::is_comment_line(lines[i]) || doc_lines.contains(static_cast<int>(i) + 1)) {
            ++counts.comment_lines;
        } else {
            ++counts.code_lines;
        }
    }
    return counts;
}

FileVerdict filter_file(std::string_view text, std::string path) {
    FileVerdict v;
    v.path = std::move(path);
    const auto lines = split_lines(text);

    std::size_t total = 0;
    std::size_t longest = 0;
    for (auto line : lines) {
        const std::size_t n = code_points(line);
        total += n;
        longest = std::max(longest, n);
    }
    if (!lines.empty() && static_cast<double>(total) / static_cast<double>(lines.size()) > kMaxAvgLineLength) {
        v.reasons.push_back(Rule::avg_line_len);
    }
    if (longest > kMaxLineLength) v.reasons.push_back(Rule::max_line_len);

    const std::size_t chars = code_points(text);
    const auto alnum = static_cast<std::size_t>(
        std::count_if(text.begin(), text.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }));
    if (chars > 0 && static_cast<double>(alnum) / static_cast<double>(chars) < kMinAlnumFraction) {
        v.reasons.push_back(Rule::alnum_frac);
    }

    for (std::size_t i = 0; i < lines.size() && i < static_cast<std::size_t>(kAutogenScanLines); ++i) {
        const std::string l = lower(lines[i]);
        if (std::any_of(kAutogenKeywords.begin(), kAutogenKeywords.end(),
                        [&](std::string_view k) { return l.find(k) != std::string::npos; })) {
            v.reasons.push_back(Rule::autogen_keyword);
            break;
        }
    }

    const LineCounts counts = comment_ratio(text);
    v.ratio = counts.ratio();
    if (counts.code_lines == 0) {
        v.reasons.push_back(Rule::empty_code);
    } else if (counts.comment_lines * 100 < counts.code_lines * 30) {
        v.reasons.push_back(Rule::ratio_low);
    } else if (counts.comment_lines * 100 > counts.code_lines * 95) {
        v.reasons.push_back(Rule::ratio_high);
    }
    v.kept = v.reasons.empty();
    return v;
}

std::vector<CodeCommentPair> extract_pairs(std::string_view text, std::string_view path) {
    python::Module module;
    try {
        module = python::parse(text);
    } catch (const Error&) {
        return {};
    }
    const LineIndex index(text);
    auto source_of = [&](int line) { return std::string(path) + ":" + std::to_string(line); };

    std::map<int, std::string> code_at;
    std::vector<CodeCommentPair> docstring_pairs;
    auto note = [&](int line, const Span& span) { code_at.emplace(line, std::string(slice(text, span))); };
    for_each_stmt(module.body, [&](const python::Stmt& s, const auto&) {
        if (!s.compound()) {
            note(s.logical_line, s.span);
            return;
        }
        for (const auto& c : s.clauses) {
            switch (c.kind) {
                case python::ClauseKind::else_:
                case python::ClauseKind::try_:
                case python::ClauseKind::finally:
                case python::ClauseKind::except:
                    break;
                default:
                    note(c.header.start.line, c.header);
            }
        }
        if (s.kind == python::StmtKind::function_def) {
            const auto& body = s.clauses.front().body;
            if (!body.empty() && python::is_docstring(body.front())) {
                std::string doc = first_paragraph(docstring_body(slice(text, body.front().span)));
                if (!doc.empty()) {
                    docstring_pairs.push_back(CodeCommentPair{std::move(doc), std::string(slice(text, s.clauses.front().header)),
                                                              source_of(s.clauses.front().header.start.line)});
                }
            }
        }
    });

    std::vector<std::pair<int, CodeCommentPair>> pairs;
    const int n = index.line_count();
    for (int l = 1; l <= n;) {
        if (!python::is_comment_line(index.line(l))) {
            ++l;
            continue;
        }
        std::string doc;
        int next = l;
        for (; next <= n && python::is_comment_line(index.line(next)); ++next) {
            std::string part = comment_text(index.line(next));
            if (part.empty()) continue;
            if (!doc.empty()) doc += ' ';
            doc += part;
        }
        if (auto it = code_at.find(next); it != code_at.end() && !doc.empty()) {
            pairs.emplace_back(next, CodeCommentPair{std::move(doc), it->second, source_of(next)});
        }
        l = next;
    }
    for (auto& p : docstring_pairs) {
        const int line = std::stoi(p.source.substr(p.source.rfind(':') + 1));
        pairs.emplace_back(line, std::move(p));
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<CodeCommentPair> out;
    out.reserve(pairs.size());
    for (auto& [line, p] : pairs) out.push_back(std::move(p));
    return out;
}

bool doc_token_count_ok(std::string_view doc) {
    std::istringstream in{std::string(doc)};
    std::size_t n = 0;
    for (std::string w; in >> w;) ++n;
    return n >= kMinDocTokens && n <= kMaxDocTokens;
}

bool has_special_tokens(std::string_view doc) {
    static const std::regex pattern(R"((https?://|www\.)|</?[A-Za-z][A-Za-z0-9-]*(\s[^<>]*)?/?>|<!--)", std::regex::icase);
    return std::regex_search(doc.begin(), doc.end(), pattern);
}

bool is_english(std::string_view doc) {
    std::size_t total = 0;
    std::size_t ascii = 0;
    for (char c : doc) {
        const auto u = static_cast<unsigned char>(c);
        if ((u & 0xC0) == 0x80) continue;
        ++total;
        if (u < 0x80) ++ascii;
    }
    return total > 0 && static_cast<double>(ascii) >= kMinEnglishFraction * static_cast<double>(total);
}

bool code_parses(std::string_view code) {
    std::string text(code);
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string::npos) return false;
    text.erase(0, first);
    if (text.starts_with("elif ") || text.starts_with("elif(")) text.erase(0, 2);
    if (python::parses(text)) return true;
    auto last = text.find_last_not_of(" \t\r\n");
    if (text[last] != ':') return false;
    text.resize(last + 1);
    return python::parses(text + "\n    pass\n");
}

std::vector<CodeCommentPair> clean_pairs(std::vector<CodeCommentPair> pairs) {
    std::erase_if(pairs, [](const CodeCommentPair& p) {
        return !doc_token_count_ok(p.doc) || has_special_tokens(p.doc) || !is_english(p.doc) || !code_parses(p.code);
    });
    return pairs;
}

std::vector<std::filesystem::path> python_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".py") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<FileVerdict> filter_directory(const std::filesystem::path& dir, unsigned workers) {
    const auto files = python_files(dir);
    return parallel_map<FileVerdict>(files, workers, [&](const std::filesystem::path& p) {
        return filter_file(read_file(p), std::filesystem::relative(p, dir).generic_string());
    });
}

std::vector<CodeCommentPair> extract_directory(const std::filesystem::path& dir, unsigned workers) {
    const auto files = python_files(dir);
    auto per_file = parallel_map<std::vector<CodeCommentPair>>(files, workers, [&](const std::filesystem::path& p) {
        const std::string text = read_file(p);
        const std::string rel = std::filesystem::relative(p, dir).generic_string();
        if (!filter_file(text, rel).kept) return std::vector<CodeCommentPair>{};
        return clean_pairs(extract_pairs(text, rel));
    });
    std::vector<CodeCommentPair> out;
    for (auto& v : per_file) std::move(v.begin(), v.end(), std::back_inserter(out));
    return out;
}

}  // namespace commentloop::corpus
