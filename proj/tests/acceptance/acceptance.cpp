#include <chrono>
#include <csignal>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <httplib.h>

#include "process.hpp"
#include "support.hpp"
#include "trating/blocklog.hpp"
#include "trating/contract.hpp"
#include "trating/json_codec.hpp"
#include "trating/netsim.hpp"
#include "trating/node.hpp"

using namespace testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Collects failures for one criterion; the first failure message is reported.
struct Check {
    std::vector<std::string> failures;
    std::vector<std::string> notes;

    void expect(bool cond, const std::string& what) {
        if (!cond) failures.push_back(what);
    }
    void note(const std::string& n) { notes.push_back(n); }
};

/// Conservation observations shared by every criterion that runs a ledger.
struct Conservation {
    std::uint64_t runs = 0;
    std::vector<std::string> violations;

    void record(const std::string& where, bool ok) {
        ++runs;
        if (!ok) violations.push_back(where);
    }
    void record_state(const std::string& where, const ledger::LedgerState& s, const ledger::Genesis& g) {
        record(where, s.total_balance() == g.total_allocation() + s.total_minted);
    }
    void record_sim(const std::string& where, const netsim::SimReport& r) {
        bool ok = r.conservation_ok && r.balance_sum == r.genesis_total + r.minted;
        for (const auto& n : r.nodes) ok = ok && n.conservation_ok;
        record(where, ok);
    }
};

Conservation g_conservation;
int g_failed = 0;

void criterion(const std::string& name, double limit_s, const std::function<void(Check&)>& body) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= limit_s) {
        std::ostringstream os;
        os << "took " << secs << " s, limit " << limit_s << " s";
        c.failures.push_back(os.str());
    }
    const bool pass = c.failures.empty();
    if (!pass) ++g_failed;
    std::ostringstream line;
    line.setf(std::ios::fixed);
    line.precision(3);
    line << (pass ? "PASS " : "FAIL ") << name << " [" << secs << " s / < " << limit_s << " s]";
    if (!pass) {
        line << ": " << c.failures.front();
        if (c.failures.size() > 1) line << " (+" << c.failures.size() - 1 << " more)";
    }
    for (const auto& n : c.notes) line << "; " << n;
    std::cout << line.str() << std::endl;
}

/// 128-bit product used as the fee oracle.
std::string oracle_fee(std::uint64_t gas, unsigned __int128 price) {
    unsigned __int128 v = static_cast<unsigned __int128>(gas) * price;
    if (v == 0) return "0";
    std::string s;
    while (v > 0) {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return s;
}

const ledger::Receipt& receipt_of(const ledger::Chain& chain, const Transaction& tx) {
    const ledger::Receipt* r = chain.receipt(tx.hash());
    if (!r) throw std::runtime_error("transaction " + tx.hash().hex() + " not included");
    return *r;
}

// ---------------------------------------------------------------------------

void gas_fidelity(Check& c) {
    World w(1, 2);
    ChainBuilder cb(w);
    const Wei price = 2000000000;
    const KeyPair& rater = w.raters[0];
    Transaction grant = w.grant(0, rater.address(), price);
    cb.seal({grant});
    Transaction set = w.rate(rater, 0, 0, 80, price);
    Transaction get = w.tx(rater, 1, ledger::GetRateArgs{w.products[0]}, price);
    cb.seal({set, get});

    struct Row {
        const Transaction& tx;
        std::uint64_t gas;
        const char* name;
    };
    for (const Row& row : {Row{grant, 47800, "GiveRightToRate"}, Row{set, 51456, "SetRate"},
                           Row{get, 42689, "GetRate"}}) {
        const ledger::Receipt& r = receipt_of(cb.chain, row.tx);
        c.expect(r.success(), std::string(row.name) + " did not succeed");
        c.expect(r.gas_used == row.gas, std::string(row.name) + " gas_used " + std::to_string(r.gas_used));
        c.expect(wei_to_string(r.fee_wei) == oracle_fee(row.gas, 2000000000),
                 std::string(row.name) + " fee " + wei_to_string(r.fee_wei));
    }
    const ledger::Receipt& sr = receipt_of(cb.chain, set);
    const std::string exact = oracle_fee(51456, 2000000000);
    c.expect(wei_to_string(sr.fee_wei) == exact, "SetRate fee at 2 gwei");
    c.expect(sr.return_value == std::nullopt, "SetRate returned a value");
    c.expect(receipt_of(cb.chain, get).return_value == 80u, "GetRate did not return 80");

    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        unsigned __int128 p = (static_cast<unsigned __int128>(rng() >> 4) << 40) | rng();
        Wei wp = static_cast<Wei>(p);
        std::uint64_t gas = rng() % 10'000'000;
        c.expect(wei_to_string(ledger::compute_fee(gas, wp)) == oracle_fee(gas, p), "random fee mismatch");
    }
    g_conservation.record_state("gas fidelity chain", cb.chain.state(), w.genesis);

    const std::string literal = "102912000000000000";
    c.note("SetRate at 2000000000 wei/gas: " + wei_to_string(sr.fee_wei) + " wei = 51456 x 2000000000; the quoted " +
           literal + " is " + (literal == exact ? "equal" : "1000x that product and is not checked"));
}

void one_vote(Check& c) {
    World w(1, 1);
    ChainBuilder cb(w);
    const KeyPair& rater = w.raters[0];
    cb.seal({w.grant(0, rater.address())});
    std::mt19937 rng(5);
    std::vector<Transaction> attempts;
    for (std::uint64_t i = 0; i < 50; ++i) attempts.push_back(w.rate(rater, i, 1, static_cast<std::uint8_t>(rng() % 101)));
    for (std::size_t i = 0; i < attempts.size(); i += 10)
        cb.seal(std::vector<Transaction>(attempts.begin() + i, attempts.begin() + i + 10));

    ledger::ReplayResult replay = ledger::replay_chain(w.genesis, cb.chain.blocks());
    c.expect(replay.ok(), "replay failed");
    int success = 0, already = 0, other = 0;
    for (const auto& r : replay.receipts) {
        if (r.function != ledger::Function::SetRate) continue;
        if (r.success()) ++success;
        else if (r.revert_reason == "The rater already rated.") ++already;
        else ++other;
    }
    c.expect(success == 1, std::to_string(success) + " successes");
    c.expect(already == 49, std::to_string(already) + " already-rated reverts");
    c.expect(other == 0, std::to_string(other) + " other outcomes");
    const auto* p = replay.state.contract.product(w.products[1]);
    c.expect(p && p->no_raters == 1, "product should have one rater");
    c.expect(replay.state == cb.chain.state(), "replayed state differs from the live chain");
    for (const auto& t : attempts) c.expect(receipt_of(cb.chain, t).gas_used == 51456, "revert charged other gas");
    g_conservation.record_state("one-vote chain", replay.state, w.genesis);
    c.note(std::to_string(success) + " Success, " + std::to_string(already) + " Reverted");
}

void averaging(Check& c) {
    std::mt19937_64 rng(2024);
    const Address owner = address_for("avg/owner");
    const Address product = address_for("avg/product");
    std::vector<Address> raters;
    for (int i = 0; i < 50; ++i) raters.push_back(address_for("avg/rater/" + std::to_string(i)));
    std::uint64_t mismatches_mean = 0, mismatches_literal = 0, ratings = 0;
    for (int s = 0; s < 10000; ++s) {
        const std::size_t len = rng() % 51;
        std::vector<std::uint32_t> values(len);
        for (auto& v : values) v = static_cast<std::uint32_t>(rng() % 101);
        for (auto mode : {contract::AveragingMode::Corrected, contract::AveragingMode::PaperLiteral}) {
            contract::ContractState st(owner, mode);
            st.create_product(owner, product, "p");
            for (std::size_t i = 0; i < len; ++i) {
                st.give_right_to_rate(owner, raters[i]);
                if (st.set_rate(raters[i], product, values[i])) throw std::runtime_error("rating reverted");
            }
            const std::uint64_t got = st.get_rate(product);
            if (mode == contract::AveragingMode::Corrected) mismatches_mean += got != oracle_mean(values);
            else mismatches_literal += got != oracle_literal(values);
        }
        ratings += len;
    }
    c.expect(mismatches_mean == 0, std::to_string(mismatches_mean) + " corrected-mode mismatches");
    c.expect(mismatches_literal == 0, std::to_string(mismatches_literal) + " paper-literal mismatches");
    c.note("10000 sequences, " + std::to_string(ratings) + " ratings per mode, 0 mismatches required");
}

void tamper(Check& c) {
    World w(4, 8);
    ChainBuilder cb(w);
    auto blocks = cb.grow(20);
    TempDir dir;
    {
        store::Recovered r = store::recover_state(dir.path(), w.genesis);
        for (const auto& b : blocks) r.log->append(b);
    }
    const std::string log = read_file(dir / store::kBlockLogFile);
    ledger::Chain clean = store::load_chain(w.genesis, log, store::TailPolicy::Strict);
    c.expect(clean.height() == 20, "unmodified log does not load to height 20");
    g_conservation.record_state("tamper baseline", clean.state(), w.genesis);

    std::mt19937_64 rng(77);
    int detected = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string bad = log;
        const std::size_t bit = rng() % (bad.size() * 8);
        bad[bit / 8] = static_cast<char>(bad[bit / 8] ^ (1u << (bit % 8)));
        try {
            ledger::Chain ch = store::load_chain(w.genesis, bad, store::TailPolicy::Strict);
            if (ch.height() != 20 || ch.head().hash != clean.head().hash) ++detected;
        } catch (const Error&) {
            ++detected;
        }
    }
    c.expect(detected == 1000, std::to_string(detected) + "/1000 mutations detected");
    c.note(std::to_string(detected) + "/1000 single-bit mutations of a " + std::to_string(log.size()) +
           "-byte log detected");
}

netsim::SimConfig poa_config() {
    netsim::SimConfig cfg;
    cfg.seed = 4242;
    cfg.validators = 4;
    cfg.workload.transactions = 1000;
    cfg.workload.raters = 40;
    cfg.workload.interval_ms = 40;
    cfg.workload.faucet_mints = 8;
    return cfg;
}

bool heads_agree(const netsim::SimReport& r) {
    for (const auto& n : r.nodes) {
        if (n.head_hash != r.nodes[0].head_hash || n.state_digest != r.nodes[0].state_digest || !n.replay_matches)
            return false;
    }
    return !r.nodes.empty();
}

void poa(Check& c) {
    netsim::SimConfig free_cfg = poa_config();
    netsim::SimReport free = netsim::run_simulation(free_cfg);
    c.expect(free.converged && !free.timed_out, "fault-free run did not converge");
    c.expect(heads_agree(free), "fault-free heads or state digests differ");
    c.expect(free.transactions_submitted == 1000, std::to_string(free.transactions_submitted) + " submitted");
    g_conservation.record_sim("poa fault-free", free);

    netsim::SimConfig part_cfg = poa_config();
    part_cfg.partitions.push_back({12000, 15000, {0, 1}});
    netsim::SimReport a = netsim::run_simulation(part_cfg);
    netsim::SimReport b = netsim::run_simulation(part_cfg);
    c.expect(a.converged && !a.timed_out, "partitioned run did not converge");
    c.expect(a.events_processed <= part_cfg.event_budget, "event budget exceeded");
    c.expect(heads_agree(a), "partitioned heads or state digests differ");
    c.expect(a.fork_count > 0 || a.nodes[0].reorgs > 0 || a.nodes[2].reorgs > 0,
             "partition produced no competing chains");
    const std::string ja = a.to_json().dump(2), jb = b.to_json().dump(2);
    c.expect(ja == jb, "two seeded runs produced different reports");
    g_conservation.record_sim("poa partition run 1", a);
    g_conservation.record_sim("poa partition run 2", b);

    std::uint64_t reorgs = 0;
    for (const auto& n : a.nodes) reorgs += n.reorgs;
    c.note("fault-free height " + std::to_string(free.max_height) + "; partition height " +
           std::to_string(a.max_height) + ", converged at " + std::to_string(a.convergence_time_ms) + " ms after " +
           std::to_string(a.events_processed) + " events, " + std::to_string(reorgs) + " reorgs; reports " +
           std::to_string(ja.size()) + " bytes, identical");
}

void authorization(Check& c) {
    using netsim::AdversaryBehavior;
    std::uint64_t sent = 0, relays = 0;
    for (auto behaviors : std::vector<std::vector<AdversaryBehavior>>{
             {AdversaryBehavior::NonAuthorityProposer},
             {AdversaryBehavior::TamperedBlockRelay},
             {AdversaryBehavior::NonAuthorityProposer, AdversaryBehavior::TamperedBlockRelay}}) {
        netsim::SimConfig cfg;
        cfg.seed = 31 + behaviors.size();
        cfg.validators = 4;
        cfg.workload.transactions = 150;
        for (auto bh : behaviors) cfg.adversaries.push_back({bh, 800, 300, 20});
        netsim::SimReport r = netsim::run_simulation(cfg);
        c.expect(r.adversarial_blocks_accepted == 0,
                 std::to_string(r.adversarial_blocks_accepted) + " adversarial blocks accepted");
        c.expect(r.converged && heads_agree(r), "honest nodes did not converge");
        for (auto bh : behaviors) {
            if (bh == AdversaryBehavior::NonAuthorityProposer) c.expect(r.adversary_blocks_sent > 0, "no forged blocks sent");
            if (bh == AdversaryBehavior::TamperedBlockRelay) c.expect(r.tampered_relays > 0, "nothing relayed");
        }
        sent += r.adversary_blocks_sent;
        relays += r.tampered_relays;
        g_conservation.record_sim("authorization", r);
    }
    c.note(std::to_string(sent) + " forged blocks and " + std::to_string(relays) +
           " tampered relays, 0 accepted");
}

void crash_recovery(Check& c) {
    World w(1, 0);
    TempDir dir;
    const fs::path gpath = dir / "genesis.json";
    write_file(gpath, codec::genesis_to_json(w.genesis).dump(2));
    node::save_keypair_file(dir / "validator.json", w.validators[0]);
    node::save_keypair_file(dir / "owner.json", w.owner);
    const fs::path data = dir / "data";
    auto args = [&](std::optional<std::uint64_t> crash) {
        std::vector<std::string> a = {"run-node",  "--data-dir", data.string(), "--genesis",
                                      gpath.string(), "--key",  (dir / "validator.json").string(),
                                      "--owner-key", (dir / "owner.json").string(), "--port", "0",
                                      "--seal-delay-ms", "5", "--quiet"};
        if (crash) {
            a.push_back("--crash-after-bytes");
            a.push_back(std::to_string(*crash));
        }
        return a;
    };

    std::mt19937_64 rng(86);
    std::uint64_t grant_seq = 0;
    std::vector<Digest> acked;
    std::vector<std::string> points;
    for (int round = 0; round < 5; ++round) {
        const std::uint64_t budget = 1 + rng() % 6000;
        points.push_back(std::to_string(budget));
        std::uint64_t height_before = 0;
        {
            Child child(args(budget));
            const std::string url = child.wait_for_url();
            if (url.empty()) throw std::runtime_error("node did not start");
            httplib::Client cl(url);
            cl.set_read_timeout(10, 0);
            height_before = json::parse(cl.Get("/chain/head")->body)["number"];
            for (int i = 0; i < 200; ++i) {
                Address to = address_for("crash/rater/" + std::to_string(grant_seq++));
                auto r = cl.Post("/demo/grant", json{{"address", to.hex()}}.dump(), "application/json");
                if (!r) break;
                if (r->status == 200) {
                    json j = json::parse(r->body);
                    if (!j.value("pending", true)) acked.push_back(Digest::from_hex(j.at("tx_hash").get<std::string>()));
                }
            }
            const int code = child.wait();
            c.expect(code == 86, "round " + std::to_string(round) + ": node exited with " + std::to_string(code));
        }

        store::Recovered rec = store::recover_state(data, std::nullopt);
        const std::uint64_t h = rec.chain.height();
        c.expect(h >= height_before, "recovered below the previous head");
        for (const auto& t : acked)
            c.expect(rec.chain.receipt(t) != nullptr, "an acknowledged transaction was lost");
        c.expect(store::load_chain(w.genesis, read_file(data / store::kBlockLogFile), store::TailPolicy::Strict)
                         .height() == h,
                 "recovered log is not a valid strict prefix");
        g_conservation.record_state("crash recovery round " + std::to_string(round), rec.chain.state(), w.genesis);
    }

    Child child(args(std::nullopt));
    const std::string url = child.wait_for_url();
    httplib::Client cl(url);
    const std::uint64_t h0 = json::parse(cl.Get("/chain/head")->body)["number"];
    auto r = cl.Post("/demo/grant", json{{"address", address_for("crash/after").hex()}}.dump(), "application/json");
    c.expect(r && r->status == 200 && json::parse(r->body)["status"] == "Success", "node did not resume sealing");
    const std::uint64_t h1 = json::parse(cl.Get("/chain/head")->body)["number"];
    c.expect(h1 > h0, "head did not advance after recovery");
    child.signal(SIGTERM);
    c.expect(child.wait() == 0, "node did not shut down cleanly");
    ledger::Chain final_chain =
        store::load_chain(w.genesis, read_file(data / store::kBlockLogFile), store::TailPolicy::Strict);
    c.expect(final_chain.height() == h1, "final log height differs from the served head");
    g_conservation.record_state("crash recovery final", final_chain.state(), w.genesis);
    c.note("crash points " + [&] {
        std::string s;
        for (const auto& p : points) s += (s.empty() ? "" : ",") + p;
        return s;
    }() + " bytes; " + std::to_string(acked.size()) + " acknowledged transactions survived; final height " +
           std::to_string(h1));
}

void conservation(Check& c) {
    for (const char* name : {"fault_free_4v.json", "partition_4v.json", "adversaries_4v.json", "single_1v.json"}) {
        netsim::SimReport r = netsim::run_simulation(netsim::SimConfig::from_json(read_json(fixture(name))));
        g_conservation.record_sim(name, r);
    }
    c.expect(g_conservation.runs > 0, "no runs recorded");
    for (const auto& v : g_conservation.violations) c.expect(false, "violated in " + v);
    c.note("balance sum = genesis total + mints in " + std::to_string(g_conservation.runs) + " runs");
}

}  // namespace

int main() {
    criterion("gas schedule fidelity", 1, gas_fidelity);
    criterion("one-vote rule", 5, one_vote);
    criterion("averaging oracle", 30, averaging);
    criterion("tamper evidence", 30, tamper);
    criterion("PoA convergence", 60, poa);
    criterion("authorization", 30, authorization);
    criterion("crash recovery", 60, crash_recovery);
    criterion("conservation", 60, conservation);
    std::cout << (g_failed == 0 ? "all criteria passed" : std::to_string(g_failed) + " criteria failed") << std::endl;
    return g_failed == 0 ? 0 : 1;
}
