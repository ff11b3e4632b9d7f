#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "trating/ledger.hpp"

/// JSON forms shared by the HTTP API, the block log and the CLI. Amounts in wei are
/// decimal strings; byte strings are 0x-hex.
namespace trating::codec {

using nlohmann::json;

json tx_to_json(const ledger::Transaction& tx);
/// Strict: unknown fields, wrong types or a hash that does not match are Error(Parse).
ledger::Transaction tx_from_json(const json& j);

json call_to_json(const ledger::CallPayload& call);
ledger::CallPayload call_from_json(ledger::Function f, const json& args);

/// The persisted block record.
json block_to_json(const ledger::Block& b);
ledger::Block block_from_json(const json& j);

json genesis_to_json(const ledger::Genesis& g);
ledger::Genesis genesis_from_json(const json& j);

json receipt_to_json(const ledger::Receipt& r);

/// Keypair file: {secret_hex, public_hex, address}. Rejects files whose parts disagree.
json keypair_to_json(const KeyPair& key);
KeyPair keypair_from_json(const json& j);

/// Compact dump with ordered keys; identical values give identical bytes.
std::string canonical_dump(const json& j);

}  // namespace trating::codec
