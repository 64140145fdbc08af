#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "curricula/decontam.hpp"
#include "curricula/errors.hpp"
#include "curricula/jsonl.hpp"

#include "test_support.hpp"

using namespace curricula;
using testsupport::TempDir;

namespace {

BenchmarkCorpus corpus(std::vector<std::string> prompts, const std::string& name = "bench",
                       Split split = Split::test) {
    BenchmarkCorpus c;
    c.name = name;
    c.split = split;
    c.prompts = std::move(prompts);
    return c;
}

std::string pair_line(const std::string& question, int i = 0) {
    return nlohmann::json{{"id", "p" + std::to_string(i)}, {"question", question}}.dump();
}

/// A sentence of `n` distinct filler words, seeded so different calls differ.
std::string filler(int n, int salt) {
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (!out.empty()) out += ' ';
        out += "w" + std::to_string(salt) + "x" + std::to_string(i);
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("decontam");

TEST_CASE("normalize_text lowercases, strips punctuation, collapses whitespace") {
    CHECK(normalize_text("What   is 2+2?") == "what is 22");
    CHECK(normalize_text("  Hello,  WORLD!  ") == "hello world");
    CHECK(normalize_text("a\tb\nc") == "a b c");
    CHECK(normalize_text("!!!") == "");
    CHECK(normalize_text("") == "");
    CHECK(normalize_text("Don't") == "dont");
    CHECK(normalize_text("x-ray") == "xray");
    CHECK(tokenize_normalized(normalize_text("One two,  THREE.")) ==
          std::vector<std::string>{"one", "two", "three"});
}

TEST_CASE("split and rule names") {
    CHECK(split_from_name("train") == Split::train);
    CHECK(split_from_name("test") == Split::test);
    CHECK_THROWS_AS(split_from_name("dev"), ParseError);
    CHECK(split_name(Split::train) == std::string("train"));
    CHECK(rule_name(MatchRule::ngram_overlap) == std::string("ngram_overlap"));
}

TEST_CASE("index construction validates its inputs") {
    CHECK_THROWS_AS(DecontamIndex({}, 10), ConfigError);
    CHECK_THROWS_AS(DecontamIndex({corpus({"a b c"})}, 2), ConfigError);
    CHECK_NOTHROW(DecontamIndex({corpus({"a b c"})}, 3));
}

TEST_CASE("substring containment is caught in both directions") {
    const DecontamIndex index({corpus({"What is the capital of France?"})}, 10);

    SUBCASE("benchmark prompt inside a longer question") {
        const auto r = index.is_contaminated(
            "Quick quiz. what IS the Capital of france??? Answer in one word.");
        REQUIRE(r.contaminated);
        REQUIRE(r.sources.size() == 1);
        CHECK(r.sources[0].rule == MatchRule::prompt_in_question);
        CHECK(r.sources[0].corpus == "bench");
        CHECK(r.sources[0].prompt_index == 0);
    }
    SUBCASE("question inside a longer benchmark prompt") {
        const auto r = index.is_contaminated("capital of France");
        REQUIRE(r.contaminated);
        CHECK(r.sources[0].rule == MatchRule::question_in_prompt);
    }
    SUBCASE("verbatim match fires both directions") {
        const auto r = index.is_contaminated("What is the capital of France?");
        REQUIRE(r.contaminated);
        CHECK(r.sources.size() == 2);
    }
    SUBCASE("unrelated text is clean") {
        const auto r = index.is_contaminated("Compute the integral of x squared from 0 to 1.");
        CHECK(!r.contaminated);
        CHECK(r.sources.empty());
    }
}

TEST_CASE("n-gram overlap fires on a shared run of n words") {
    const std::string shared = filler(10, 1);  // exactly 10 words
    const DecontamIndex index({corpus({shared + " " + filler(5, 2)})}, 10);

    SUBCASE("ten shared words in an otherwise different question") {
        const auto r = index.is_contaminated(filler(4, 3) + " " + shared + " " + filler(4, 4));
        REQUIRE(r.contaminated);
        REQUIRE(r.sources.size() == 1);
        CHECK(r.sources[0].rule == MatchRule::ngram_overlap);
        CHECK(r.sources[0].detail == shared);
    }
    SUBCASE("nine shared words do not fire") {
        std::string nine = filler(10, 1);
        nine = nine.substr(nine.find(' ') + 1);  // drop the first word -> 9 shared
        const auto r = index.is_contaminated(filler(4, 3) + " " + nine + " " + filler(4, 4));
        CHECK(!r.contaminated);
    }
    SUBCASE("short benchmark prompts participate via substring only") {
        const DecontamIndex short_index({corpus({"alpha beta gamma"})}, 10);
        // Contains all three words but not contiguously: clean.
        CHECK(!short_index.is_contaminated("alpha beta delta gamma " + filler(8, 5)).contaminated);
        CHECK(short_index.is_contaminated("intro alpha beta gamma outro").contaminated);
    }
}

TEST_CASE("duplicate (entry, rule) hits are reported once") {
    const std::string shared = filler(11, 7);  // 11 words -> two overlapping 10-grams
    const DecontamIndex index({corpus({shared})}, 10);
    const auto r = index.is_contaminated(filler(3, 8) + " " + shared + " " + filler(3, 9));
    REQUIRE(r.contaminated);
    int ngram_hits = 0;
    for (const auto& s : r.sources)
        if (s.rule == MatchRule::ngram_overlap) ++ngram_hits;
    CHECK(ngram_hits == 1);
}

TEST_CASE("an empty or punctuation-only question is clean") {
    const DecontamIndex index({corpus({"some benchmark prompt here"})}, 10);
    CHECK(!index.is_contaminated("").contaminated);
    CHECK(!index.is_contaminated("?!?!").contaminated);
}

TEST_CASE("filter_pairs keeps lines byte-identical and explains removals") {
    const DecontamIndex index({corpus({"What is the capital of France?"}, "geo", Split::test)},
                              10);
    const std::string clean1 = pair_line("Integrate x^2 over [0,1].", 1);
    const std::string dirty = pair_line("what is the capital of FRANCE?", 2);
    const std::string clean2 = pair_line("Name a prime greater than 100.", 3);
    std::istringstream in(clean1 + "\n" + dirty + "\n\n" + clean2 + "\n");
    std::ostringstream kept, removed;

    const RemovalReport report = filter_pairs(in, kept, &removed, index);
    CHECK(report.input == 3);
    CHECK(report.kept == 2);
    CHECK(report.removed == 1);
    CHECK(kept.str() == clean1 + "\n" + clean2 + "\n");

    const auto removed_record = nlohmann::json::parse(removed.str());
    CHECK(removed_record["pair"]["id"] == "p2");
    REQUIRE(removed_record["matches"].size() == 2);  // both substring directions
    CHECK(removed_record["matches"][0]["corpus"] == "geo");
    CHECK(removed_record["matches"][0]["split"] == "test");
    CHECK(removed_record["matches"][0]["prompt_index"] == 0);

    REQUIRE(report.by_source.size() == 2);
    for (const auto& [corpus_name, split, rule, count] : report.by_source) {
        CHECK(corpus_name == "geo");
        CHECK(split == Split::test);
        CHECK(count == 1);
    }
    const auto j = report.to_json();
    CHECK(j["input"] == 3);
    CHECK(j["kept"] == 2);
    CHECK(j["removed"] == 1);
    CHECK(j["by_source"].size() == 2);
}

TEST_CASE("filter_pairs rejects malformed lines") {
    const DecontamIndex index({corpus({"prompt words here okay"})}, 10);
    std::ostringstream kept;
    {
        std::istringstream in("not json\n");
        CHECK_THROWS_AS(filter_pairs(in, kept, nullptr, index), ParseError);
    }
    {
        std::istringstream in("{\"id\":\"x\"}\n");  // no question field
        CHECK_THROWS_AS(filter_pairs(in, kept, nullptr, index), ParseError);
    }
    {
        std::istringstream in("{\"question\":42}\n");  // wrong type
        CHECK_THROWS_AS(filter_pairs(in, kept, nullptr, index), ParseError);
    }
    {
        std::istringstream in(
            "{\"prompt\":\"Fine here.\"}\n");  // custom field name honoured
        std::ostringstream kept2;
        const auto report = filter_pairs(in, kept2, nullptr, index, "prompt");
        CHECK(report.kept == 1);
    }
}

TEST_CASE("filtering is order-invariant and idempotent") {
    const DecontamIndex index({corpus({filler(10, 21), "the capital of France"})}, 10);
    std::vector<std::string> lines;
    for (int i = 0; i < 20; ++i) lines.push_back(pair_line("Unique clean question " + filler(10, 100 + i), i));
    lines.push_back(pair_line(filler(3, 50) + " " + filler(10, 21) + " tail", 90));  // dirty
    lines.push_back(pair_line("Paris is the capital of France", 91));               // dirty

    auto run = [&](const std::vector<std::string>& ordered) {
        std::string joined;
        for (const auto& l : ordered) joined += l + "\n";
        std::istringstream in(joined);
        std::ostringstream kept;
        const auto report = filter_pairs(in, kept, nullptr, index);
        return std::pair<RemovalReport, std::string>(report, kept.str());
    };

    auto [report, kept] = run(lines);
    CHECK(report.removed == 2);
    CHECK(report.kept == 20);

    std::vector<std::string> shuffled = lines;
    std::mt19937 urbg(7);
    std::shuffle(shuffled.begin(), shuffled.end(), urbg);
    auto [report2, kept2] = run(shuffled);
    CHECK(report2.removed == report.removed);
    CHECK(report2.kept == report.kept);

    // Re-filtering the survivors changes nothing.
    std::istringstream again(kept);
    std::ostringstream kept_again;
    const auto report3 = filter_pairs(again, kept_again, nullptr, index);
    CHECK(report3.removed == 0);
    CHECK(kept_again.str() == kept);
}

TEST_CASE("load_corpus reads text and jsonl formats") {
    TempDir dir("corpus");
    const auto text_path = dir.path() / "bench.txt";
    write_file_atomic(text_path, "First prompt.\n\n  \nSecond prompt.\n");
    const auto c1 = load_corpus(text_path, "t", Split::test, "text", "question");
    CHECK(c1.prompts == std::vector<std::string>{"First prompt.", "Second prompt."});
    CHECK(c1.name == "t");
    CHECK(c1.split == Split::test);

    const auto jsonl_path = dir.path() / "bench.jsonl";
    write_file_atomic(jsonl_path,
                      "{\"question\":\"Q one\",\"answer\":\"A\"}\n{\"question\":\"Q two\"}\n");
    const auto c2 = load_corpus(jsonl_path, "j", Split::train, "jsonl", "question");
    CHECK(c2.prompts == std::vector<std::string>{"Q one", "Q two"});
    CHECK(c2.split == Split::train);

    CHECK_THROWS_AS(load_corpus(jsonl_path, "j", Split::train, "jsonl", "absent"), ParseError);
    CHECK_THROWS_AS(load_corpus(jsonl_path, "j", Split::train, "parquet", "question"),
                    ConfigError);
    CHECK_THROWS_AS(load_corpus(dir.path() / "missing.txt", "m", Split::test, "text", "q"),
                    IoError);
}

TEST_SUITE_END();
