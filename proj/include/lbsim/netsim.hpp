#pragma once

#include <cstdint>
#include <vector>

#include "lbsim/guardrail.hpp"
#include "lbsim/rng.hpp"

namespace lbsim {

// Order-sensitive 64-bit rolling hash over job-id sequences (FNV-1a over the
// id bytes). Fixed constants keep traces reproducible across runs and
// implementations; equal id sequences always collide, differing ones only
// with ~2^-64 probability.
std::uint64_t digest_init();
std::uint64_t digest_update(std::uint64_t digest, std::uint64_t job_id);

// Uniform choice of receiving dispatcher; splits the Poisson arrival stream
// into d thinned-Poisson sub-streams of rate lambda/d.
int route_arrival(int dispatcher_count, RngStream& rng);

// Emitted when a server empties: one message per dispatcher carrying the
// server's per-dispatcher job-id digest at that moment.
struct ResetMessage {
    int server = 0;
    int dispatcher = 0;
    std::uint64_t digest = 0;
    double emit_time = 0;
    double deliver_time = 0;
    // Ground truth the simulator knows (not part of the protocol): how many
    // jobs from this dispatcher the server had received when it emptied.
    std::int64_t received_at_emit = 0;
};

// One dispatcher: its own local guardrail state plus a rolling digest of the
// job ids it has sent to each server.
struct DispatcherNode {
    int id = 0;
    GuardrailState guard;
    std::vector<std::uint64_t> digest_to_server;
    std::vector<std::int64_t> sent_count;

    DispatcherNode(int id_, GuardrailConfig cfg);
    void note_dispatch(int server, std::uint64_t job_id);
};

// Applies the reset iff the message digest matches the dispatcher's current
// digest for that server (i.e. the dispatcher sent nothing since the server
// emptied). Returns whether the reset was applied.
bool handle_reset_message(DispatcherNode& node, const ResetMessage& msg);

}  // namespace lbsim
