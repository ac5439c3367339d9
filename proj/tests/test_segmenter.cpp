#include <chrono>

#include <gtest/gtest.h>

#include "json.hpp"

#include "commentloop/segmenter.hpp"
#include "properties.hpp"
#include "testkit.hpp"

using namespace commentloop;
using testkit::fs::path;

namespace {

std::vector<std::string> texts(const std::vector<Segment>& segs) {
    std::vector<std::string> out;
    for (const auto& s : segs) out.push_back(s.text);
    return out;
}

std::vector<SegmentKind> kinds(const std::vector<Segment>& segs) {
    std::vector<SegmentKind> out;
    for (const auto& s : segs) out.push_back(s.kind);
    return out;
}

}  // namespace

TEST(Segmenter, SingleStatement) {
    const auto segs = segment(SourceUnit::from_text("x = 1"));
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_EQ(segs[0].kind, SegmentKind::simple);
    EXPECT_EQ(segs[0].span.start.line, 1);
    EXPECT_EQ(segs[0].span.end.line, 1);
    EXPECT_EQ(segs[0].text, "x = 1");
}

TEST(Segmenter, DigitSumFunctionBody) {
    const std::string src =
        "def solve(N):\n    total = 0\n    for d in str(N):\n        digit = int(d)\n        total += digit\n    return total\n";
    const auto segs = segment_source(SourceUnit::from_text(src));
    EXPECT_EQ(kinds(segs), (std::vector<SegmentKind>{SegmentKind::simple, SegmentKind::loop_header,
                                                      SegmentKind::body_member, SegmentKind::body_member,
                                                      SegmentKind::simple}));
    EXPECT_EQ(texts(segs), (std::vector<std::string>{"total = 0", "for d in str(N):", "digit = int(d)",
                                                      "total += digit", "return total"}));
    EXPECT_EQ(segs[2].depth, 1);
    EXPECT_EQ(segs[1].depth, 0);
}

TEST(Segmenter, NestedIfElseInsideWhile) {
    const std::string src =
        "def f(n):\n"
        "    i = 0\n"
        "    while i < n:\n"
        "        if i % 2:\n"
        "            print(i)\n"
        "        else:\n"
        "            print(-i)\n"
        "        i += 1\n"
        "    return i\n";
    const auto segs = segment(SourceUnit::from_text(src));
    EXPECT_EQ(texts(segs), (std::vector<std::string>{"i = 0", "while i < n:", "if i % 2:", "print(i)", "print(-i)",
                                                      "i += 1", "return i"}));
    EXPECT_EQ(segs[4].kind, SegmentKind::else_body_member);
    EXPECT_EQ(segs[3].depth, 2);
}

TEST(Segmenter, TryWithoutHeaderSegments) {
    const auto segs = segment(SourceUnit::from_text("try:\n    a()\nexcept E:\n    b()\nfinally:\n    c()\n"));
    EXPECT_EQ(texts(segs), (std::vector<std::string>{"a()", "b()", "c()"}));
}

TEST(Segmenter, WithHeaderExcludesSuite) {
    const auto segs = segment(SourceUnit::from_text("with open(p) as f:\n    data = f.read()\n"));
    ASSERT_EQ(segs.size(), 2u);
    EXPECT_EQ(segs[0].kind, SegmentKind::with_header);
    EXPECT_EQ(segs[0].text, "with open(p) as f:");
}

TEST(Segmenter, ImportsDefinitionsAndDocstringsSkipped) {
    const auto segs = segment(SourceUnit::from_text(
        "\"\"\"Module.\"\"\"\nimport os\nfrom a import b\n@dec\nclass C:\n    \"\"\"Doc.\"\"\"\n    def m(self):\n        return 1\n"));
    EXPECT_EQ(texts(segs), (std::vector<std::string>{"return 1"}));
}

TEST(Segmenter, MultiLineStatementIsOneSegment) {
    const auto segs = segment(SourceUnit::from_text("x = [\n    1,\n    2,\n]\ny = 2\n"));
    ASSERT_EQ(segs.size(), 2u);
    EXPECT_EQ(segs[0].span.start, (Position{1, 0}));
    EXPECT_EQ(segs[0].span.end, (Position{4, 1}));
    EXPECT_EQ(segs[0].anchor_line, 1);
}

TEST(Segmenter, LineFallback) {
    const SourceUnit bad = SourceUnit::from_text("def f(:\n  return 1");
    EXPECT_EQ(bad.parse_status, ParseStatus::fallback);
    EXPECT_THROW(segment_source(bad), ParseFailure);
    const auto segs = segment(bad);
    ASSERT_EQ(segs.size(), 2u);
    for (const auto& s : segs) EXPECT_EQ(s.kind, SegmentKind::fallback_line);
    EXPECT_EQ(segs[1].text, "  return 1");
    EXPECT_EQ(segs, segment_lines(bad));

    EXPECT_TRUE(segment_lines(SourceUnit::from_text("")).empty());
    EXPECT_EQ(segment_lines(SourceUnit::from_text("a\n\nb\n# c\nc\n")).size(), 3u);
}

TEST(Segmenter, DispatchIdentity) {
    const SourceUnit good = SourceUnit::from_text("if a:\n    b = 1\n");
    EXPECT_EQ(segment(good), segment_source(good));
}

TEST(Segmenter, FixtureSuiteMatchesExpectedFiles) {
    const auto files = testkit::segment_fixtures();
    ASSERT_EQ(files.size(), 25u);
    for (const auto& f : files) EXPECT_EQ(testkit::fixture_mismatch(f), "");
}

TEST(Segmenter, FixtureSuiteMatchesLiveOracle) {
    for (const auto& f : testkit::segment_fixtures()) {
        const auto r = testkit::run(testkit::python() + " " +
                                    testkit::quote((testkit::fixtures().parent_path() / "oracle" / "reference_walk.py").string()) +
                                    " " + testkit::quote(f.string()));
        ASSERT_EQ(r.exit_code, 0) << f;
        const auto unit = SourceUnit::from_text(testkit::read_text(f));
        EXPECT_EQ(testkit::encode_segments(segment_source(unit)), nlohmann::json::parse(r.output)) << f;
    }
}

TEST(Segmenter, MixedCorpusParseStatusMatchesOracle) {
    int files = 0;
    for (const auto& e : testkit::fs::directory_iterator(testkit::fixtures() / "mixed")) {
        ++files;
        const auto r = testkit::run(testkit::python() + " " +
                                    testkit::quote((testkit::fixtures().parent_path() / "oracle" / "reference_walk.py").string()) +
                                    " --parses " + testkit::quote(e.path().string()));
        ASSERT_EQ(r.exit_code, 0);
        const bool oracle = r.output.starts_with("true");
        const auto unit = SourceUnit::from_text(testkit::read_text(e.path()));
        EXPECT_EQ(unit.parse_status == ParseStatus::parsed, oracle) << e.path();
        EXPECT_EQ(oracle, e.path().filename().string().starts_with("ok_")) << e.path();
    }
    EXPECT_EQ(files, 20);
}

TEST(Segmenter, RandomProgramsAgreeWithOracle) {
    testkit::TempDir dir;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        testkit::ProgramGen gen(seed * 7919 + 3);
        const std::string src = gen.program();
        const path file = dir.path() / ("r" + std::to_string(seed) + ".py");
        testkit::write_text(file, src);
        const auto r = testkit::run(testkit::python() + " " +
                                    testkit::quote((testkit::fixtures().parent_path() / "oracle" / "reference_walk.py").string()) +
                                    " " + testkit::quote(file.string()));
        ASSERT_EQ(r.exit_code, 0) << src;
        EXPECT_EQ(testkit::encode_segments(segment_source(SourceUnit::from_text(src))), nlohmann::json::parse(r.output))
            << src;
    }
}

TEST(Segmenter, ReassemblyOnFixtures) {
    for (const auto& f : testkit::segment_fixtures()) {
        const auto unit = SourceUnit::from_text(testkit::read_text(f));
        EXPECT_EQ(testkit::reassembly_error(unit, segment(unit)), "") << f;
    }
}

TEST(Segmenter, ReassemblyAndIdempotenceOnRandomPrograms) {
    testkit::EchoCommenter commenter;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        testkit::ProgramGen gen(seed);
        const auto unit = SourceUnit::from_text(gen.program());
        ASSERT_EQ(unit.parse_status, ParseStatus::parsed) << unit.text;
        EXPECT_EQ(testkit::reassembly_error(unit, segment(unit)), "") << unit.text;
        EXPECT_EQ(testkit::idempotence_error(unit, commenter), "") << unit.text;
    }
}

TEST(Segmenter, IdempotenceOnFallbackUnits) {
    testkit::EchoCommenter commenter;
    for (const auto& e : testkit::fs::directory_iterator(testkit::fixtures() / "mixed")) {
        const auto unit = SourceUnit::from_text(testkit::read_text(e.path()));
        EXPECT_EQ(testkit::idempotence_error(unit, commenter), "") << e.path();
    }
}

TEST(Segmenter, FixtureSuiteRunsUnderOneSecond) {
    std::vector<SourceUnit> units;
    for (const auto& f : testkit::segment_fixtures()) units.push_back(SourceUnit::from_text(testkit::read_text(f)));
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t total = 0;
    for (const auto& u : units) total += segment(u).size();
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    EXPECT_GT(total, 0u);
    EXPECT_LT(elapsed, std::chrono::seconds(1));
}
