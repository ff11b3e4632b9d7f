#include "trating/blocklog.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "trating/json_codec.hpp"

namespace trating::store {

namespace fs = std::filesystem;

std::string encode_record(const ledger::Block& b) { return codec::canonical_dump(codec::block_to_json(b)); }

ledger::Block decode_record(std::string_view line) {
    codec::json j;
    try {
        j = codec::json::parse(line.begin(), line.end());
    } catch (const codec::json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("not valid JSON: ") + e.what());
    }
    ledger::Block b = codec::block_from_json(j);
    if (encode_record(b) != line) throw Error(ErrorCode::Parse, "record is not in canonical form");
    return b;
}

LogContents parse_log(std::string_view data, TailPolicy policy) {
    LogContents out;
    std::size_t pos = 0;
    while (pos < data.size()) {
        std::size_t nl = data.find('\n', pos);
        const std::uint64_t height = out.blocks.size() + 1;
        if (nl == std::string_view::npos) {
            if (policy == TailPolicy::TruncateTorn) {
                out.torn_tail = true;
                break;
            }
            throw Error(ErrorCode::Parse, "block log corrupt at height " + std::to_string(height) +
                                              ": final record has no terminating newline");
        }
        try {
            out.blocks.push_back(decode_record(data.substr(pos, nl - pos)));
        } catch (const Error& e) {
            throw Error(ErrorCode::Parse, "block log corrupt at height " + std::to_string(height) + ": " + e.what());
        }
        pos = nl + 1;
        out.record_ends.push_back(pos);
    }
    out.valid_bytes = pos;
    return out;
}

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
    throw Error(ErrorCode::Io, what + " " + path.string() + ": " + std::strerror(errno));
}

void write_file_durably(const fs::path& path, const std::string& data) {
    fs::path tmp = path;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("cannot create", tmp);
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            io_fail("cannot write", tmp);
        }
        off += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
    fs::rename(tmp, path);
}

}  // namespace

LogContents read_log(const fs::path& path, TailPolicy policy) {
    if (!fs::exists(path)) return {};
    return parse_log(slurp(path), policy);
}

namespace {

ledger::Chain chain_from_blocks(const ledger::Genesis& genesis, const std::vector<ledger::Block>& blocks) {
    ledger::Chain chain(genesis);
    for (const auto& b : blocks) {
        ledger::BlockCheck check = chain.append(b);
        if (!check.ok()) {
            throw Error(ErrorCode::Parse,
                        "block log corrupt at height " + std::to_string(chain.height() + 1) + ": " + check.describe());
        }
    }
    return chain;
}

}  // namespace

ledger::Chain load_chain(const ledger::Genesis& genesis, std::string_view data, TailPolicy policy) {
    return chain_from_blocks(genesis, parse_log(data, policy).blocks);
}

// ---------------------------------------------------------------------------

BlockLog::BlockLog(fs::path path, std::uint64_t valid_bytes, std::vector<std::uint64_t> record_ends)
    : path_(std::move(path)), size_(valid_bytes), record_ends_(std::move(record_ends)) {
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) io_fail("cannot open", path_);
    if (::ftruncate(fd_, static_cast<off_t>(size_)) != 0) io_fail("cannot truncate", path_);
    ::fsync(fd_);
}

BlockLog::~BlockLog() {
    if (fd_ >= 0) ::close(fd_);
}

void BlockLog::write_all(const std::string& data) {
    std::size_t limit = data.size();
    bool crash = false;
    if (crash_.after_bytes && written_ + data.size() > *crash_.after_bytes) {
        limit = static_cast<std::size_t>(*crash_.after_bytes - written_);
        crash = true;
    }
    std::size_t off = 0;
    while (off < limit) {
        ssize_t n = ::pwrite(fd_, data.data() + off, limit - off, static_cast<off_t>(size_ + off));
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("cannot append to", path_);
        }
        off += static_cast<std::size_t>(n);
    }
    if (crash) {
        ::fsync(fd_);
        if (crash_.throw_instead) throw SimulatedCrash();
        std::_Exit(86);
    }
    if (::fsync(fd_) != 0) io_fail("cannot sync", path_);
    written_ += data.size();
    size_ += data.size();
}

void BlockLog::append(const ledger::Block& b) {
    if (b.number != height() + 1) {
        throw Error(ErrorCode::Internal, "block log append out of order at height " + std::to_string(b.number));
    }
    write_all(encode_record(b) + "\n");
    record_ends_.push_back(size_);
}

void BlockLog::truncate_to(std::uint64_t height) {
    if (height >= record_ends_.size()) return;
    record_ends_.resize(height);
    size_ = height == 0 ? 0 : record_ends_.back();
    if (::ftruncate(fd_, static_cast<off_t>(size_)) != 0) io_fail("cannot truncate", path_);
    if (::fsync(fd_) != 0) io_fail("cannot sync", path_);
}

// ---------------------------------------------------------------------------

Recovered recover_state(const fs::path& data_dir, const std::optional<ledger::Genesis>& genesis) {
    std::error_code ec;
    fs::create_directories(data_dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create data directory " + data_dir.string() + ": " + ec.message());

    const fs::path genesis_path = data_dir / kGenesisFile;
    std::optional<ledger::Genesis> stored;
    if (fs::exists(genesis_path)) {
        codec::json j;
        try {
            j = codec::json::parse(slurp(genesis_path));
        } catch (const codec::json::exception& e) {
            throw Error(ErrorCode::Parse, genesis_path.string() + ": " + e.what());
        }
        stored = codec::genesis_from_json(j);
    }
    if (stored && genesis && !(*stored == *genesis)) {
        throw Error(ErrorCode::Config, "genesis differs from the one stored in " + genesis_path.string());
    }
    if (!stored) {
        if (!genesis) throw Error(ErrorCode::Config, "no genesis given and none stored in " + data_dir.string());
        write_file_durably(genesis_path, codec::genesis_to_json(*genesis).dump(2) + "\n");
        stored = genesis;
    }

    const fs::path log_path = data_dir / kBlockLogFile;
    LogContents contents = read_log(log_path, TailPolicy::TruncateTorn);
    std::uint64_t file_size = fs::exists(log_path) ? fs::file_size(log_path) : 0;
    ledger::Chain chain = chain_from_blocks(*stored, contents.blocks);

    Recovered out{std::move(chain), contents.torn_tail, file_size - contents.valid_bytes, nullptr};
    out.log = std::make_unique<BlockLog>(log_path, contents.valid_bytes, std::move(contents.record_ends));
    return out;
}

}  // namespace trating::store
