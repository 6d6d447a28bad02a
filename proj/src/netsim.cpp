#include "lbsim/netsim.hpp"

namespace lbsim {

namespace {
constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;
}  // namespace

std::uint64_t digest_init() { return kFnvOffset; }

std::uint64_t digest_update(std::uint64_t digest, std::uint64_t job_id) {
    for (int i = 0; i < 8; ++i) {
        digest ^= (job_id >> (8 * i)) & 0xFFu;
        digest *= kFnvPrime;
    }
    return digest;
}

int route_arrival(int dispatcher_count, RngStream& rng) {
    if (dispatcher_count <= 1) return 0;
    return static_cast<int>(rng.next_below(static_cast<std::uint64_t>(dispatcher_count)));
}

DispatcherNode::DispatcherNode(int id_, GuardrailConfig cfg)
    : id(id_),
      guard(std::move(cfg)),
      digest_to_server(guard.config().server_count, digest_init()),
      sent_count(guard.config().server_count, 0) {}

void DispatcherNode::note_dispatch(int server, std::uint64_t job_id) {
    digest_to_server[server] = digest_update(digest_to_server[server], job_id);
    ++sent_count[server];
}

bool handle_reset_message(DispatcherNode& node, const ResetMessage& msg) {
    if (node.digest_to_server[msg.server] != msg.digest) return false;
    node.guard.reset(msg.server);
    return true;
}

}  // namespace lbsim
