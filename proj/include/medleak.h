/* medleak: offline analysis of medical IoT captures for cleartext leaks. */
#ifndef MEDLEAK_H
#define MEDLEAK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MEDLEAK_API __declspec(dllexport)
#else
#define MEDLEAK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum medleak_status {
    MEDLEAK_OK = 0,
    MEDLEAK_ERR_INVALID_ARGUMENT = 1,
    MEDLEAK_ERR_IO = 2,
    MEDLEAK_ERR_MALFORMED_CAPTURE = 3,
    MEDLEAK_ERR_CONFIG = 4,
    MEDLEAK_ERR_EMPTY_REGISTRY = 5,
    MEDLEAK_ERR_DICTIONARY = 6,
    MEDLEAK_ERR_UNKNOWN_SCENARIO = 7,
    MEDLEAK_ERR_CORPUS = 8,
    MEDLEAK_ERR_INTERNAL = 9
} medleak_status;

typedef enum medleak_format {
    MEDLEAK_FORMAT_JSON = 0,
    MEDLEAK_FORMAT_TEXT = 1
} medleak_format;

/* Exit codes of an analysis: 0 all devices OK, 1 warnings, 2 leaks. */
enum { MEDLEAK_EXIT_OK = 0, MEDLEAK_EXIT_WARN = 1, MEDLEAK_EXIT_LEAK = 2, MEDLEAK_EXIT_ERROR = 3 };

typedef struct medleak_config medleak_config;
typedef struct medleak_result medleak_result;

MEDLEAK_API const char* medleak_version(void);
MEDLEAK_API const char* medleak_status_string(medleak_status status);

/* Message of the last failed call on this thread; "" if none. */
MEDLEAK_API const char* medleak_last_error(void);

/* Frees any buffer returned through an out parameter. */
MEDLEAK_API void medleak_buffer_free(void* buffer);

MEDLEAK_API medleak_status medleak_config_create(medleak_config** out);
MEDLEAK_API void medleak_config_destroy(medleak_config* config);
/* INI file with [classifier], [metadata], [leak], [evaluation], [devices]. */
MEDLEAK_API medleak_status medleak_config_load(medleak_config* config, const char* path);
MEDLEAK_API medleak_status medleak_config_load_registry(medleak_config* config, const char* path);
/* key is "section.name", e.g. "classifier.chi_threshold". */
MEDLEAK_API medleak_status medleak_config_set(medleak_config* config, const char* key, const char* value);
MEDLEAK_API medleak_status medleak_config_add_device(medleak_config* config, const char* mac, const char* label);

MEDLEAK_API medleak_status medleak_analyze_files(const medleak_config* config, const char* const* paths,
                                                 size_t count, medleak_result** out);
/* names may be NULL; captures are then named "capture-<i>". */
MEDLEAK_API medleak_status medleak_analyze_memory(const medleak_config* config, const uint8_t* const* captures,
                                                  const size_t* lengths, const char* const* names, size_t count,
                                                  medleak_result** out);

MEDLEAK_API void medleak_result_destroy(medleak_result* result);
MEDLEAK_API int medleak_result_exit_code(const medleak_result* result);
MEDLEAK_API uint64_t medleak_result_unattributed(const medleak_result* result);
MEDLEAK_API size_t medleak_result_warning_count(const medleak_result* result);
MEDLEAK_API const char* medleak_result_warning(const medleak_result* result, size_t index);
/* NUL-terminated; *length excludes the terminator. */
MEDLEAK_API medleak_status medleak_result_render(const medleak_result* result, medleak_format format, char** out,
                                                 size_t* length);

/* Scenarios: bp-monitor-leaky, scale-encrypted, mixed-home. */
MEDLEAK_API medleak_status medleak_generate_fixture(const char* scenario, uint8_t** out, size_t* length);
MEDLEAK_API medleak_status medleak_fixture_registry(const char* scenario, char** out, size_t* length);

/* Labeled corpus as JSON lines. */
MEDLEAK_API medleak_status medleak_generate_corpus(uint64_t seed, size_t n_cleartext, size_t n_encrypted,
                                                   size_t min_length, size_t max_length, char** out,
                                                   size_t* length);
MEDLEAK_API medleak_status medleak_compare_corpus(const medleak_config* config, const char* jsonl, size_t jsonl_length,
                                                  medleak_format format, char** out, size_t* length);

MEDLEAK_API double medleak_shannon_entropy(const uint8_t* bytes, size_t length);
MEDLEAK_API double medleak_chi_squared(const uint8_t* bytes, size_t length);

#ifdef __cplusplus
}
#endif

#endif
