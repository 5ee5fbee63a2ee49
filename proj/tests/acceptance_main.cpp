// Acceptance suite: runs every shipping criterion end to end and prints one
// PASS/FAIL line per criterion. argv[1] is the path of the accelerator CLI
// binary (used by the determinism criterion). Exits nonzero on any failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "accelerator/eval_harness.hpp"
#include "accelerator/intent_filter.hpp"
#include "accelerator/llm_alternator.hpp"
#include "accelerator/pipeline.hpp"
#include "accelerator/serve.hpp"
#include "fixture_corpus.hpp"
#include "sim_table.hpp"

using namespace accel;
namespace fs = std::filesystem;
using testutil::SimTable;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            detail = what;
        }
    }
};

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

fs::path scratch_dir(const char* name) {
    const auto dir = fs::temp_directory_path() / "accel_acceptance" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

QueryChain make_chain(std::initializer_list<const char*> queries) {
    QueryChain chain;
    for (const auto* q : queries) chain.queries.push_back(q);
    chain.terminal_converted = true;
    return chain;
}

// ---- criterion 1: segmentation worked example, exact and under 1 ms ----

Check criterion_segmentation() {
    Check check;
    Session session;
    session.session_id = "s1";
    std::int64_t ts = 0;
    auto add_query = [&](const char* q) {
        RawEvent ev;
        ev.session_id = "s1";
        ev.timestamp_ms = ++ts;
        ev.kind = EventKind::QueryIssued;
        ev.query_text = q;
        session.events.push_back(ev);
    };
    auto add_bbowac = [&](const char* item) {
        RawEvent ev;
        ev.session_id = "s1";
        ev.timestamp_ms = ++ts;
        ev.kind = EventKind::Bbowac;
        ev.bbowac_kind = BbowacKind::Buy;
        ev.item_id = item;
        session.events.push_back(ev);
    };
    for (const char* q : {"a", "b", "c", "d"}) add_query(q);
    add_bbowac("i1");
    add_query("e");
    add_query("f");
    add_bbowac("i2");

    mine_chains({session});  // warm up
    const auto start = std::chrono::steady_clock::now();
    const auto chains = mine_chains({session});
    const auto elapsed = std::chrono::steady_clock::now() - start;

    check.expect(chains.size() == 2, "expected exactly two chains");
    if (chains.size() == 2) {
        check.expect(chains[0].queries == std::vector<std::string>{"a", "b", "c", "d"},
                     "first chain is not [a,b,c,d]");
        check.expect(chains[1].queries == std::vector<std::string>{"e", "f"},
                     "second chain is not [e,f]");
    }
    check.expect(elapsed < std::chrono::milliseconds(1), "mining took 1 ms or longer");
    return check;
}

// ---- criterion 2: intent filter worked example ----

Check criterion_intent_example() {
    Check check;
    SimTable table;
    table.set("macbook", "iphone 12", 0.6);
    table.set("iphone 12", "iphone 12 red", 0.9);
    table.set("iphone 12 red", "iphone 12 128gb", 0.95);
    const auto filtered = filter_chain(
        make_chain({"macbook", "iphone 12", "iphone 12 red", "iphone 12 128gb"}), table.fn(),
        {0.7});
    check.expect(filtered.queries ==
                     std::vector<std::string>{"iphone 12", "iphone 12 red", "iphone 12 128gb"},
                 "macbook was not the only query excluded");
    return check;
}

// ---- criterion 3: alternator worked example ----

Check criterion_alternator_example() {
    Check check;
    JourneyContext journey;
    journey.transitional_query = "18k gold diamonds necklace";
    journey.source_queries = {{"18k gold dacid yarmen", 1}, {"david yurman chain gold 18k", 1}};
    journey.converging_queries = {{"david yurman chain gold 18k", 1},
                                  {"18k gold david yurman", 1}};
    journey.support = 2;

    const std::vector<std::string> listed = {
        "18k white gold diamond necklace",
        "18k yellow gold diamond necklace",
        "18k gold diamond pendant necklace",
        "18k gold diamond necklace david yurman",
        "18k gold diamond necklace tiffany & co",
        "18k gold diamond necklace cartier",
        "18k gold diamond necklace van cleef & arpels"};

    MockLlmClient client;
    client.add_contains("18k gold diamonds necklace", testutil::gold_completion_text());

    const auto survivors =
        enforce_constraints(parse_response(client.complete(build_prompt({journey, 7}))), journey);
    check.expect(survivors == listed, "constraint filtering changed the listed alternates");

    const auto record = alternate_journey(journey, client, {}, {});
    check.expect(record.anchor_query == "18k gold diamonds necklace", "wrong anchor");
    check.expect(!record.alternates.empty(), "no alternates emitted");
    bool branded = false;
    for (const auto& alt : record.alternates) {
        check.expect(std::find(listed.begin(), listed.end(), alt.query) != listed.end(),
                     "alternate \"" + alt.query + "\" is not in the listed set");
        check.expect(alt.query != "david yurman chain gold 18k" &&
                         alt.query != "18k gold david yurman",
                     "a mined converging query leaked through");
        check.expect(alt.provenance == Provenance::Llm, "expected llm provenance");
        if (alt.query == "18k gold diamond necklace cartier" ||
            alt.query == "18k gold diamond necklace tiffany & co" ||
            alt.query == "18k gold diamond necklace van cleef & arpels" ||
            alt.query == "18k gold diamond necklace david yurman") {
            branded = true;
        }
    }
    check.expect(branded, "no brand-expanded alternate kept");
    return check;
}

// ---- criterion 4: intent filter property suite ----

Check criterion_intent_properties() {
    Check check;
    std::mt19937_64 rng(41001);
    int violations = 0;
    for (int round = 0; round < 1000; ++round) {
        const std::size_t len = 2 + rng() % 7;
        QueryChain chain;
        for (std::size_t i = 0; i < len; ++i) chain.queries.push_back("q" + std::to_string(i));
        chain.terminal_converted = true;

        SimTable table;
        for (std::size_t i = 0; i + 1 < len; ++i) {
            table.set(chain.queries[i], chain.queries[i + 1], uniform(rng));
        }
        const double threshold = uniform(rng);
        const auto sim = table.fn();
        const auto out = filter_chain(chain, sim, {threshold});

        if (out.queries.empty() || out.queries.back() != chain.queries.back()) ++violations;
        const auto offset = chain.queries.size() - out.queries.size();
        for (std::size_t i = 0; i < out.queries.size(); ++i) {
            if (out.queries[i] != chain.queries[offset + i]) ++violations;
        }
        for (std::size_t i = 0; i + 1 < out.queries.size(); ++i) {
            if (sim(out.queries[i], out.queries[i + 1]) < threshold) ++violations;
        }
        if (filter_chain(out, sim, {threshold}) != out) ++violations;
        const double higher = threshold + (1.0 - threshold) * uniform(rng);
        if (filter_chain(chain, sim, {higher}).queries.size() > out.queries.size()) ++violations;
    }
    check.expect(violations == 0, std::to_string(violations) + " property violations");
    return check;
}

// ---- criterion 5: MMR property suite ----

std::vector<std::string> greedy_mmr_oracle(const std::vector<std::string>& candidates,
                                           const std::string& anchor, const SimTable& table,
                                           double lambda, std::size_t k) {
    std::vector<std::string> selected;
    std::vector<std::string> remaining = candidates;
    while (selected.size() < k && !remaining.empty()) {
        std::size_t best = 0;
        double best_score = -1e18;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            double score;
            if (selected.empty()) {
                score = table.at(remaining[i], anchor);
            } else {
                double redundancy = 0.0;
                for (const auto& s : selected) {
                    redundancy = std::max(redundancy, table.at(remaining[i], s));
                }
                score = lambda * table.at(remaining[i], anchor) - (1.0 - lambda) * redundancy;
            }
            if (score > best_score) {
                best = i;
                best_score = score;
            }
        }
        selected.push_back(remaining[best]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return selected;
}

Check criterion_mmr_properties() {
    Check check;
    std::mt19937_64 rng(51001);
    int violations = 0;
    for (int round = 0; round < 500; ++round) {
        const std::size_t n = 1 + rng() % 6;
        std::vector<std::string> candidates;
        for (std::size_t i = 0; i < n; ++i) candidates.push_back("c" + std::to_string(i));
        SimTable table;
        for (std::size_t i = 0; i < n; ++i) {
            table.set(candidates[i], "anchor", uniform(rng));
            for (std::size_t j = i + 1; j < n; ++j) {
                table.set(candidates[i], candidates[j], uniform(rng));
            }
        }
        DiversityConfig cfg;
        cfg.mmr_lambda = uniform(rng);
        cfg.k_out = 1 + rng() % 6;

        std::vector<std::string> got;
        for (const auto& sq : mmr_rerank(candidates, "anchor", table.fn(), cfg)) {
            got.push_back(sq.query);
        }
        if (got != greedy_mmr_oracle(candidates, "anchor", table, cfg.mmr_lambda, cfg.k_out)) {
            ++violations;
        }

        DiversityConfig sorted_cfg;
        sorted_cfg.mmr_lambda = 1.0;
        sorted_cfg.k_out = n;
        std::vector<std::string> want = candidates;
        std::stable_sort(want.begin(), want.end(),
                         [&](const std::string& a, const std::string& b) {
                             return table.at(a, "anchor") > table.at(b, "anchor");
                         });
        std::vector<std::string> got_sorted;
        for (const auto& sq : mmr_rerank(candidates, "anchor", table.fn(), sorted_cfg)) {
            got_sorted.push_back(sq.query);
        }
        if (got_sorted != want) ++violations;
    }
    check.expect(violations == 0, std::to_string(violations) + " oracle mismatches");
    return check;
}

// ---- criterion 6: similarity property suite ----

Check criterion_similarity_properties() {
    Check check;
    auto profile = [](std::initializer_list<const char*> items) {
        QueryItemProfile p;
        p.query = "q";
        for (const auto* item : items) ++p.items[item];
        return p;
    };
    check.expect(sim_items(profile({"a", "b"}), profile({"a", "b"})) == 1.0,
                 "identical sets must score 1.0");
    check.expect(sim_items(profile({"a"}), profile({"b"})) == 0.0, "disjoint sets must score 0.0");
    check.expect(sim_items(profile({"a", "b", "c"}), profile({"b", "c", "d"})) == 0.5,
                 "2-of-4 overlap must score 0.5");

    std::mt19937_64 rng(61001);
    const char* vocab[] = {"gold", "necklace", "18k", "diamond", "ring", "case", "watch"};
    ProfileMap profiles;
    std::vector<std::string> queries;
    for (int i = 0; i < 14; ++i) {
        std::string q;
        const auto words = 1 + rng() % 3;
        for (std::size_t w = 0; w < words; ++w) {
            if (!q.empty()) q += ' ';
            q += vocab[rng() % 7];
        }
        queries.push_back(q);
        if (rng() % 2 == 0) {
            auto& p = profiles[q];
            p.query = q;
            const auto items = 1 + rng() % 6;
            for (std::size_t it = 0; it < items; ++it) ++p.items["i" + std::to_string(rng() % 9)];
        }
    }
    for (int round = 0; round < 500; ++round) {
        const auto& a = queries[rng() % queries.size()];
        const auto& b = queries[rng() % queries.size()];
        const double ab = similarity(a, b, profiles);
        const double ba = similarity(b, a, profiles);
        check.expect(std::abs(ab - ba) < 1e-12, "similarity must be symmetric");
        check.expect(ab >= 0.0 && ab <= 1.0, "similarity must stay in [0,1]");
        check.expect(similarity(a, a, profiles) == 1.0, "self-similarity must be 1.0");
        if (!check.ok) break;
    }
    return check;
}

// ---- criterion 7: metric arithmetic and formatting ----

Check criterion_metric_arithmetic() {
    Check check;
    std::vector<ImpressionEvent> events;
    for (int i = 0; i < 10; ++i) {
        ImpressionEvent ev;
        ev.anchor_query = "a";
        ev.shown = {"x"};
        if (i < 3) ev.clicked_index = 0;
        ev.converted = i < 1;
        events.push_back(ev);
    }
    const auto counted = compute_metrics(events);
    check.expect(counted.ctr == 0.30 && counted.cvr == 0.10, "ratio arithmetic is off");

    MetricsReport baseline;
    baseline.ctr = 0.10;
    baseline.cvr = 0.10;
    MetricsReport variant;
    variant.ctr = 0.0664;
    variant.cvr = 0.10;
    const auto delta = relative_delta(variant, baseline);
    check.expect(format_delta_pct(delta.ctr_delta_pct) == "-33.6%",
                 "expected -33.6%, got " + format_delta_pct(delta.ctr_delta_pct));
    return check;
}

// ---- criterion 8: directional replay on the synthetic corpus ----

Check criterion_directional_replay() {
    Check check;
    const auto start = std::chrono::steady_clock::now();

    const auto dir = scratch_dir("replay");
    const auto cfg = load_config(testutil::write_demo_corpus(dir));
    std::ostringstream log;
    pipeline::run_mine(cfg, log);
    pipeline::run_profiles(cfg, log);
    pipeline::run_filter(cfg, log);
    pipeline::run_alternate(cfg, log);
    pipeline::run_build_store(cfg, log);

    const auto llm_store = SuggestionStore::load(cfg.paths.store);
    auto journeys_in = open_input(cfg.paths.journeys);
    SuggestionStore mined_store;
    for (const auto& [t, journey] : read_journeys(journeys_in)) {
        mined_store.put(mined_record(journey));
    }

    const auto model = pipeline::make_click_model(cfg);
    const auto llm_metrics =
        compute_metrics(synthesize_replay(llm_store, model, 10'000, cfg.seed));
    const auto mined_metrics =
        compute_metrics(synthesize_replay(mined_store, model, 10'000, cfg.seed));
    const auto delta = relative_delta(llm_metrics, mined_metrics);

    check.expect(delta.ctr_delta_pct > 0.0,
                 "ctr delta not positive: " + format_delta_pct(delta.ctr_delta_pct));
    check.expect(delta.cvr_delta_pct > 0.0,
                 "cvr delta not positive: " + format_delta_pct(delta.cvr_delta_pct));

    const auto elapsed = std::chrono::steady_clock::now() - start;
    check.expect(elapsed < std::chrono::seconds(30), "replay exceeded 30 s");
    if (check.ok) {
        check.detail = "ctr " + format_delta_pct(delta.ctr_delta_pct) + ", cvr " +
                       format_delta_pct(delta.cvr_delta_pct);
    }
    return check;
}

// ---- criterion 9: end-to-end determinism through the CLI ----

Check criterion_cli_determinism(const std::string& cli) {
    Check check;
    if (cli.empty()) {
        check.expect(false, "no CLI binary path given (argv[1])");
        return check;
    }
    const auto dir_a = scratch_dir("cli_run_a");
    const auto dir_b = scratch_dir("cli_run_b");
    for (const auto& dir : {dir_a, dir_b}) {
        const auto config = testutil::write_demo_corpus(dir);
        const std::string cmd =
            "\"" + cli + "\" pipeline --config \"" + config.string() + "\" >/dev/null 2>&1";
        check.expect(std::system(cmd.c_str()) == 0, "pipeline subcommand failed");
        if (!check.ok) return check;
    }
    for (const char* name : {"journeys.jsonl", "store.jsonl", "eval_report.json"}) {
        const auto a = slurp(dir_a / name);
        check.expect(!a.empty(), std::string(name) + " is empty");
        check.expect(a == slurp(dir_b / name), std::string(name) + " differs between runs");
    }
    return check;
}

// ---- criterion 10: serving contract under concurrent reloads ----

Check criterion_serving_contract() {
    Check check;

    auto build_store = [](double score, const char* flavor) {
        auto store = std::make_shared<SuggestionStore>();
        SuggestionRecord rec;
        rec.anchor_query = "iphone case";
        rec.alternates = {{std::string("iphone magsafe case ") + flavor, score, Provenance::Llm},
                          {std::string("iphone 11 case ") + flavor, score / 2, Provenance::Llm}};
        store->put(rec);
        return store;
    };
    const auto store_a = build_store(0.9, "a");
    const auto store_b = build_store(0.5, "b");
    const std::string body_a = related_response_json(*store_a->get("iphone case")).dump();
    const std::string body_b = related_response_json(*store_b->get("iphone case")).dump();

    RelatedSearchServer server(store_a);
    const int port = server.bind_ephemeral();
    std::thread serving([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    {
        httplib::Client client("127.0.0.1", port);
        const auto hit = client.Get("/related?q=iphone%20case");
        check.expect(hit && hit->status == 200, "expected 200 for a stored anchor");
        if (hit) {
            const auto j = nlohmann::json::parse(hit->body, nullptr, false);
            check.expect(!j.is_discarded() && j.contains("query") && j["query"].is_string() &&
                             j.contains("alternates") && j["alternates"].is_array() &&
                             !j["alternates"].empty() && j["alternates"][0].contains("q") &&
                             j["alternates"][0].contains("score") &&
                             j["alternates"][0].contains("provenance"),
                         "200 body does not match the schema");
        }
        const auto miss = client.Get("/related?q=unknown%20anchor");
        check.expect(miss && miss->status == 404, "expected 404 for an unknown anchor");
        const auto blank = client.Get("/related?q=%20%20");
        check.expect(blank && blank->status == 400, "expected 400 for whitespace-only q");
    }

    constexpr int kThreads = 10;
    constexpr int kPerThread = 100;  // 1,000 requests total
    std::atomic<int> mixed{0};
    std::atomic<int> failed{0};
    std::atomic<bool> reloading{true};

    std::thread swapper([&] {
        bool use_a = false;
        while (reloading.load()) {
            server.swap_store(use_a ? store_a : store_b);
            use_a = !use_a;
            std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
    });

    std::vector<std::thread> clients;
    for (int t = 0; t < kThreads; ++t) {
        clients.emplace_back([&] {
            httplib::Client client("127.0.0.1", port);
            for (int i = 0; i < kPerThread; ++i) {
                const auto res = client.Get("/related?q=iphone%20case");
                if (!res || res->status != 200) {
                    ++failed;
                    continue;
                }
                if (res->body != body_a && res->body != body_b) ++mixed;
            }
        });
    }
    for (auto& t : clients) t.join();
    reloading = false;
    swapper.join();
    server.stop();
    serving.join();

    check.expect(failed.load() == 0, std::to_string(failed.load()) + " requests failed");
    check.expect(mixed.load() == 0,
                 std::to_string(mixed.load()) + " mixed-snapshot responses observed");
    return check;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";

    struct Criterion {
        int id;
        const char* name;
        std::function<Check()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "segmentation worked example", criterion_segmentation},
        {2, "intent filter worked example", criterion_intent_example},
        {3, "alternator worked example", criterion_alternator_example},
        {4, "intent filter property suite", criterion_intent_properties},
        {5, "MMR property suite", criterion_mmr_properties},
        {6, "similarity property suite", criterion_similarity_properties},
        {7, "metric arithmetic and formatting", criterion_metric_arithmetic},
        {8, "directional replay vs mined-only baseline", criterion_directional_replay},
        {9, "end-to-end CLI determinism", [&cli] { return criterion_cli_determinism(cli); }},
        {10, "serving contract under concurrent reloads", criterion_serving_contract},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Check check;
        try {
            check = criterion.run();
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = std::string("exception: ") + e.what();
        }
        if (check.ok) {
            std::cout << "PASS  " << criterion.id << "  " << criterion.name;
            if (!check.detail.empty()) std::cout << " (" << check.detail << ")";
            std::cout << "\n";
        } else {
            ++failures;
            std::cout << "FAIL  " << criterion.id << "  " << criterion.name << ": "
                      << check.detail << "\n";
        }
    }
    if (failures > 0) {
        std::cout << failures << " of " << criteria.size() << " criteria failed\n";
        return 1;
    }
    std::cout << "all " << criteria.size() << " criteria passed\n";
    return 0;
}
