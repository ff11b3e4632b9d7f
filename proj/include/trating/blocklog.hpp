#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trating/ledger.hpp"

namespace trating::store {

/// One block as a single canonical JSON line, without the newline.
std::string encode_record(const ledger::Block& b);
/// Rejects any line that is not byte-identical to the canonical encoding of what it decodes to.
ledger::Block decode_record(std::string_view line);

enum class TailPolicy {
    /// Any defect, including a missing final newline, is an error.
    Strict,
    /// A final line without its newline is a torn write and is dropped.
    TruncateTorn,
};

struct LogContents {
    std::vector<ledger::Block> blocks;
    /// Bytes of the complete records kept.
    std::uint64_t valid_bytes = 0;
    /// End offset of each record, newline included.
    std::vector<std::uint64_t> record_ends;
    bool torn_tail = false;
};

/// Splits and decodes the log. Interior corruption is Error(Parse) naming the height.
LogContents parse_log(std::string_view data, TailPolicy policy);
LogContents read_log(const std::filesystem::path& path, TailPolicy policy);

/// Decodes and replays a log against genesis. Error(Parse) names the first bad height.
ledger::Chain load_chain(const ledger::Genesis& genesis, std::string_view data, TailPolicy policy);

/// Test hook: the writer dies partway through the byte at which the budget runs out.
struct CrashInjection {
    std::optional<std::uint64_t> after_bytes;
    /// Throw SimulatedCrash instead of terminating the process.
    bool throw_instead = false;
};

struct SimulatedCrash : std::runtime_error {
    SimulatedCrash() : std::runtime_error("simulated crash") {}
};

/// Append-only JSON-lines block log with fsync after each record.
class BlockLog {
public:
    /// Opens (creating if needed) the log; existing content must already be valid.
    BlockLog(std::filesystem::path path, std::uint64_t valid_bytes, std::vector<std::uint64_t> record_ends);
    ~BlockLog();
    BlockLog(const BlockLog&) = delete;
    BlockLog& operator=(const BlockLog&) = delete;

    void append(const ledger::Block& b);
    /// Drops records above height, used when a fork replaces the tail.
    void truncate_to(std::uint64_t height);

    std::uint64_t height() const { return record_ends_.size(); }
    const std::filesystem::path& path() const { return path_; }
    void set_crash_injection(CrashInjection c) { crash_ = c; }

private:
    void write_all(const std::string& data);

    std::filesystem::path path_;
    int fd_ = -1;
    std::uint64_t size_ = 0;
    std::vector<std::uint64_t> record_ends_;
    CrashInjection crash_;
    std::uint64_t written_ = 0;
};

struct Recovered {
    ledger::Chain chain;
    bool torn_tail = false;
    std::uint64_t dropped_bytes = 0;
    std::unique_ptr<BlockLog> log;
};

/// Loads data_dir/genesis.json (writing `genesis` there on first start) and data_dir/blocks.jsonl,
/// truncates a torn tail, replays, and returns the chain with a log opened for appending.
/// Fails on interior corruption or a genesis that differs from the stored one.
Recovered recover_state(const std::filesystem::path& data_dir, const std::optional<ledger::Genesis>& genesis);

inline constexpr const char* kGenesisFile = "genesis.json";
inline constexpr const char* kBlockLogFile = "blocks.jsonl";

}  // namespace trating::store
