#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "abpipe/classifier/linear_model.hpp"
#include "abpipe/orchestrator/orchestrator.hpp"

namespace abpipe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

int cmd_validate(const std::filesystem::path& bundle, std::ostream& out, std::ostream& err);

int cmd_run(const std::filesystem::path& bundle, const std::filesystem::path& scenario,
            std::optional<std::uint64_t> seed, const std::filesystem::path& out_dir,
            orchestrator::ExecutionMode mode, std::ostream& out, std::ostream& err);

// `seeds` holds either an explicit list or one base seed expanded to
// base .. base + runs - 1.
std::vector<std::uint64_t> expand_seeds(const std::vector<std::uint64_t>& seeds, std::size_t runs);

int cmd_compare(const std::filesystem::path& sequential, const std::filesystem::path& parallel,
                const std::filesystem::path& scenario, std::size_t runs,
                const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out_dir,
                std::ostream& out, std::ostream& err);

int cmd_train(const std::filesystem::path& csv, const classifier::SgdParams& params,
              const std::filesystem::path& model_out, std::ostream& out, std::ostream& err);

int cmd_gen_data(const std::filesystem::path& scenario, std::uint64_t n,
                 const std::filesystem::path& csv_out, std::optional<std::uint64_t> seed,
                 std::ostream& out, std::ostream& err);

}  // namespace abpipe::cli
