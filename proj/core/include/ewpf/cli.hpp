#pragma once

namespace ewpf {

// Command-line surface: generate / train / evaluate / benchmark / forecast.
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 numerical divergence. EWPF_SEED overrides any configured seed.
int cli_main(int argc, const char* const* argv);

}  // namespace ewpf
