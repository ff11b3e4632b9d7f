#ifndef TRATING_H
#define TRATING_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(TRATING_BUILDING_LIBRARY)
#define TR_API __attribute__((visibility("default")))
#else
#define TR_API
#endif

typedef enum tr_status {
    TR_OK = 0,
    TR_ERR_INVALID_ARGUMENT = 1,
    TR_ERR_PARSE = 2,
    TR_ERR_CRYPTO = 3,
    TR_ERR_IO = 4,
    TR_ERR_OVERFLOW = 5,
    TR_ERR_CONFIG = 6,
    TR_ERR_INTERNAL = 7,
} tr_status;

/* Message for the last failed call on this thread; empty after a success. */
TR_API const char* tr_last_error(void);
TR_API const char* tr_status_name(tr_status status);
TR_API const char* tr_version(void);

/* Every char** output is heap-allocated and must be released with tr_string_free. */
TR_API void tr_string_free(char* s);

/* Keys */
typedef struct tr_keypair tr_keypair;

TR_API tr_status tr_keypair_generate(tr_keypair** out);
TR_API tr_status tr_keypair_from_secret_hex(const char* secret_hex, tr_keypair** out);
TR_API tr_status tr_keypair_load(const char* path, tr_keypair** out);
/* Fails if the file exists. The file is created with mode 0600. */
TR_API tr_status tr_keypair_save(const tr_keypair* key, const char* path);
TR_API tr_status tr_keypair_address(const tr_keypair* key, char** out_hex);
/* {"secret_hex", "public_hex", "address"} */
TR_API tr_status tr_keypair_to_json(const tr_keypair* key, char** out_json);
TR_API void tr_keypair_free(tr_keypair* key);

/* Transactions
 * request: {"nonce", "to", "function", "args", "value"?, "gas_limit"?, "gas_price"?}
 * gas_limit defaults to the intrinsic gas of the function, gas_price and value to 0. */
TR_API tr_status tr_tx_build(const tr_keypair* key, const char* request_json, char** out_tx_json);
TR_API tr_status tr_tx_hash(const char* tx_json, char** out_hash_hex);
/* Signed wire bytes as 0x-hex. */
TR_API tr_status tr_tx_encode(const char* tx_json, char** out_raw_hex);
TR_API tr_status tr_tx_decode(const char* raw_hex, char** out_tx_json);
/* Checks the sender address and signature. */
TR_API tr_status tr_tx_verify(const char* tx_json, int* out_valid);

TR_API tr_status tr_hash_hex(const uint8_t* data, size_t len, char** out_hex);
/* fee_wei = gas_used * gas_price, both decimal strings. */
TR_API tr_status tr_fee(uint64_t gas_used, const char* gas_price_dec, char** out_fee_dec);

/* Genesis: validates and normalizes a genesis document, filling defaults. */
TR_API tr_status tr_genesis_init(const char* genesis_json, char** out_genesis_json);
TR_API tr_status tr_genesis_hash(const char* genesis_json, char** out_hash_hex);
/* Replays a block log file against a genesis; reports height, head and state digest. */
TR_API tr_status tr_log_verify(const char* genesis_json, const char* log_path, char** out_summary_json);

/* Simulation and reports */
TR_API tr_status tr_sim_run(const char* config_json, char** out_report_json);
TR_API tr_status tr_sim_summary(const char* config_json, char** out_report_json, char** out_summary_text);

typedef enum tr_cost_format { TR_COST_JSON = 0, TR_COST_CSV = 1, TR_COST_TABLE = 2 } tr_cost_format;
/* input is JSON when input_is_csv is 0; gas_schedule_json may be NULL for the default schedule. */
TR_API tr_status tr_cost_report(const char* input, int input_is_csv, const char* gas_schedule_json,
                                tr_cost_format format, char** out);

/* Node
 * config: {"host", "port", "data_dir", "genesis_path" | "genesis", "validator_key_path", "owner_key_path",
 *          "peers", "faucet_enabled", "ui_dir", "advertise_url", "seal_delay_ms", "sync_interval_ms",
 *          "crash_after_bytes", "verbose"} */
typedef struct tr_node tr_node;

TR_API tr_status tr_node_start(const char* config_json, tr_node** out);
TR_API int tr_node_port(const tr_node* node);
TR_API tr_status tr_node_url(const tr_node* node, char** out_url);
TR_API tr_status tr_node_stop(tr_node* node);
TR_API void tr_node_free(tr_node* node);

#ifdef __cplusplus
}
#endif

#endif
