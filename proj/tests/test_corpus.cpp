#include <gtest/gtest.h>

#include "commentloop/corpus.hpp"
#include "properties.hpp"
#include "testkit.hpp"

using namespace commentloop::corpus;

namespace {

std::string lines_of(int n, const std::string& line) {
    std::string out;
    for (int i = 0; i < n; ++i) out += line + "\n";
    return out;
}

bool has(const FileVerdict& v, Rule r) { return std::find(v.reasons.begin(), v.reasons.end(), r) != v.reasons.end(); }

std::string commented_block(int comments, int code, std::size_t width) {
    std::string out;
    for (int i = 0; i < comments; ++i) out += "# " + std::string(width - 2, 'c') + "\n";
    for (int i = 0; i < code; ++i) {
        const std::string head = "v" + std::to_string(i) + " = '";
        out += head + std::string(width - head.size() - 1, 'x') + "'\n";
    }
    return out;
}

}  // namespace

TEST(Filter, LongAverageLinesAreDropped) {
    const FileVerdict v = filter_file(commented_block(10, 20, 150), "wide.py");
    EXPECT_FALSE(v.kept);
    EXPECT_TRUE(has(v, Rule::avg_line_len));
}

TEST(Filter, OneHugeLineIsDropped) {
    std::string text = commented_block(10, 30, 20);
    text += "big = '" + std::string(1200 - 8, 'z') + "'\n";
    const FileVerdict v = filter_file(text, "huge.py");
    EXPECT_FALSE(v.kept);
    EXPECT_TRUE(has(v, Rule::max_line_len));
    EXPECT_FALSE(has(v, Rule::avg_line_len));
}

TEST(Filter, OrdinaryFileIsKept) {
    std::string text = "import math\n\n\ndef area(r):\n    \"\"\"Area of a circle.\"\"\"\n";
    for (int i = 0; i < 12; ++i) {
        text += "    # step " + std::to_string(i) + "\n";
        text += "    r = r + " + std::to_string(i) + "\n";
    }
    text += "    return math.pi * r * r\n";
    const FileVerdict v = filter_file(text, "ok.py");
    EXPECT_TRUE(v.kept);
    EXPECT_TRUE(v.reasons.empty());
    ASSERT_TRUE(v.ratio.has_value());
    EXPECT_DOUBLE_EQ(*v.ratio, 13.0 / 15.0);
}

TEST(Ratio, InclusiveWindow) {
    const auto at = [](int c, int k) { return filter_file(commented_block(c, k, 20), "r.py"); };
    EXPECT_TRUE(at(30, 100).kept);
    EXPECT_TRUE(at(95, 100).kept);
    EXPECT_TRUE(has(at(96, 100), Rule::ratio_high));
    EXPECT_TRUE(has(at(29, 100), Rule::ratio_low));
    const FileVerdict none = at(0, 10);
    EXPECT_TRUE(has(none, Rule::ratio_low));
    EXPECT_DOUBLE_EQ(*none.ratio, 0.0);
}

TEST(Ratio, CountsDocstringsNotTrailingCommentsOrStrings) {
    LineCounts c = comment_ratio("# a\nx = 1  # b\ns = '# c'\n\n   \n");
    EXPECT_EQ(c.comment_lines, 1u);
    EXPECT_EQ(c.code_lines, 2u);
    c = comment_ratio("def f():\n    \"\"\"One.\n\n    Two.\n    \"\"\"\n    return 1\n");
    EXPECT_EQ(c.comment_lines, 3u);
    EXPECT_EQ(c.code_lines, 2u);
    c = comment_ratio("def f(:\n    \"\"\"x\"\"\"\n");
    EXPECT_EQ(c.comment_lines, 0u);
    EXPECT_EQ(c.code_lines, 2u);
    EXPECT_FALSE(comment_ratio("# only\n").ratio().has_value());
}

TEST(Filter, EmptyCodeAndAutogen) {
    EXPECT_TRUE(has(filter_file("# just words\n", "c.py"), Rule::empty_code));
    const std::string body = commented_block(5, 10, 20);
    EXPECT_TRUE(has(filter_file("# Auto-Generated by tool\n" + body, "a.py"), Rule::autogen_keyword));
    EXPECT_FALSE(has(filter_file(lines_of(5, "x = 1") + "# do not edit\n" + body, "b.py"), Rule::autogen_keyword));
}

TEST(Filter, LabeledCorpusMatchesExactly) {
    std::size_t checked = 0;
    const auto bad = testkit::corpus_label_mismatches(&checked);
    EXPECT_EQ(checked, 50u);
    for (const auto& b : bad) ADD_FAILURE() << b;
}

TEST(Filter, BoundaryFilesInTheCorpus) {
    const auto dir = testkit::fixtures() / "corpus";
    EXPECT_TRUE(filter_file(testkit::read_text(dir / "ratio_030_100.py"), "a").kept);
    EXPECT_TRUE(filter_file(testkit::read_text(dir / "ratio_095_100.py"), "b").kept);
    const FileVerdict wide = filter_file(testkit::read_text(dir / "avg_len_101.py"), "c");
    EXPECT_FALSE(wide.kept);
    EXPECT_TRUE(has(wide, Rule::avg_line_len));
    EXPECT_TRUE(filter_file(testkit::read_text(dir / "avg_len_100.py"), "d").kept);
}

TEST(Pairs, CommentAboveStatement) {
    const auto pairs = extract_pairs("# add one\nx += 1\n", "f.py");
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0], (CodeCommentPair{"add one", "x += 1", "f.py:2"}));
}

TEST(Pairs, StackedCommentsJoin) {
    const auto pairs = extract_pairs("#   first part\n# second part\nfor i in range(3):\n    pass\n", "f.py");
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0].doc, "first part second part");
    EXPECT_EQ(pairs[0].code, "for i in range(3):");
}

TEST(Pairs, NoStatementBelow) {
    EXPECT_TRUE(extract_pairs("x = 1\n# dangling\n", "f.py").empty());
    EXPECT_TRUE(extract_pairs("# gap\n\nx = 1\n", "f.py").empty());
    EXPECT_TRUE(extract_pairs("try:\n    pass\n# handler\nexcept E:\n    pass\n", "f.py").empty());
    EXPECT_TRUE(extract_pairs("# broken\ndef f(:\n", "f.py").empty());
}

TEST(Pairs, FunctionDocstringFirstParagraph) {
    const auto pairs = extract_pairs(
        "def absolute(x):\n    \"\"\"Returns the absolute value\n    of x.\n\n    Details follow.\n    \"\"\"\n    return abs(x)\n",
        "m.py");
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0].doc, "Returns the absolute value of x.");
    EXPECT_EQ(pairs[0].code, "def absolute(x):");
    EXPECT_EQ(pairs[0].source, "m.py:1");
}

TEST(Clean, TokenLimits) {
    EXPECT_FALSE(doc_token_count_ok("sorts."));
    EXPECT_FALSE(doc_token_count_ok("sorts the"));
    EXPECT_TRUE(doc_token_count_ok("sorts the list"));
    std::string many;
    for (int i = 0; i < 256; ++i) many += "w ";
    EXPECT_TRUE(doc_token_count_ok(many));
    EXPECT_FALSE(doc_token_count_ok(many + "w"));
}

TEST(Clean, SpecialTokensAndLanguage) {
    EXPECT_TRUE(has_special_tokens("see https://example.com for more"));
    EXPECT_TRUE(has_special_tokens("see www.example.com"));
    EXPECT_TRUE(has_special_tokens("wrap in <b>bold</b> text"));
    EXPECT_FALSE(has_special_tokens("x < y and y > z"));
    EXPECT_TRUE(is_english("returns the absolute value"));
    EXPECT_FALSE(is_english("возвращает абсолютное значение"));
}

TEST(Clean, CodeMustParse) {
    EXPECT_TRUE(code_parses("x += 1"));
    EXPECT_TRUE(code_parses("for i in range(3):"));
    EXPECT_TRUE(code_parses("elif x > 2:"));
    EXPECT_TRUE(code_parses("def f(a, b):"));
    EXPECT_FALSE(code_parses("x += "));
}

TEST(Clean, KeepsOnlyGoodPairs) {
    std::vector<CodeCommentPair> pairs{
        {"returns the absolute value", "return abs(x)", "a:1"},
        {"sorts.", "xs.sort()", "a:2"},
        {"docs at https://example.com here", "f()", "a:3"},
        {"returns the absolute value", "return abs(", "a:4"},
    };
    const auto kept = clean_pairs(pairs);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].source, "a:1");
}

TEST(Directory, ExtractUsesKeptFilesOnly) {
    testkit::TempDir dir;
    testkit::fs::create_directories(dir.path() / "pkg");
    testkit::write_text(dir.path() / "pkg" / "good.py",
                        "# compute the total of the values\ntotal = sum(values)\n# print the total value\nprint(total)\ndone = True\n");
    testkit::write_text(dir.path() / "bad.py", "x = 1\ny = 2\nz = 3\n# lonely comment line\nw = 4\n");
    testkit::write_text(dir.path() / "notes.txt", "# not python\nx = 1\n");
    const auto verdicts = filter_directory(dir.path(), 2);
    ASSERT_EQ(verdicts.size(), 2u);
    EXPECT_EQ(verdicts[0].path, "bad.py");
    EXPECT_EQ(verdicts[1].path, "pkg/good.py");
    const auto pairs = extract_directory(dir.path(), 2);
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_EQ(pairs[0].source, "pkg/good.py:2");
    EXPECT_EQ(pairs[1].doc, "print the total value");
}
