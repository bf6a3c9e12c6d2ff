#include "htg/default_bank.hpp"

#include "htg/memory.hpp"

namespace htg {

namespace {

GlobalNode make_global(NodeId id, std::string label, GlobalPrior prior) {
    return GlobalNode{std::move(id), std::move(label), std::move(prior), {}};
}

LocalNode make_local(NodeId id, NodeId parent, LocalPrior prior) {
    return LocalNode{std::move(id), std::move(parent), std::move(prior), {}, {}};
}

void add_globals(MemoryBank& bank) {
    bank.add_global(make_global(
        std::string(global_id::kMemoryAccess), "Memory Access",
        {"Improve coalesced access, stride patterns, and effective memory throughput.",
         {"memory-bound", "strided-access"},
         {"elementwise kernels", "contiguous loads and stores", "gather/scatter with regular stride"},
         {"misaligned vector loads", "alignment assumptions on views or slices"},
         {"bandwidth", "fewer memory transactions"}}));
    bank.add_global(make_global(
        std::string(global_id::kBoundary), "Boundary",
        {"Isolate boundary cases so that the hot path becomes simpler and more predictable.",
         {"boundary-risk", "branch-heavy-loop"},
         {"tails not divisible by the vector width", "shape-dependent guards inside hot loops"},
         {"off-by-one tails", "unhandled empty or odd-sized inputs"},
         {"branch reduction", "simpler hot loop"}}));
    bank.add_global(make_global(
        std::string(global_id::kThroughput), "Throughput",
        {"Improve effective throughput through safe unrolling, blocking, hoisting, or related "
         "transformations.",
         {"repeated-index-computation", "branch-heavy-loop"},
         {"short fixed-trip inner loops", "loop-invariant address math", "reductions"},
         {"register pressure", "reduced occupancy", "floating-point reassociation"},
         {"instruction throughput", "latency hiding"}}));
    bank.add_global(make_global(
        std::string(global_id::kDataReuse), "Data Reuse",
        {"Improve local reuse through tiling, staging, or lightweight fusion.",
         {"memory-bound", "repeated-index-computation"},
         {"producer-consumer elementwise chains", "stencils", "matmul-like reuse"},
         {"shared-memory bank conflicts", "synchronization bugs", "larger launch footprint"},
         {"reduced DRAM traffic", "fewer kernel launches"}}));
    bank.add_global(make_global(
        std::string(global_id::kParallelMapping), "Parallel Mapping",
        {"Align block/thread mapping with output layout and hardware execution behavior.",
         {"strided-access", "memory-bound"},
         {"2D/3D outputs", "per-row reductions", "too few or too many threads per element"},
         {"occupancy cliffs", "grid-size limits", "divergent lanes"},
         {"occupancy", "coalescing through remapping"}}));
}

void add_locals(MemoryBank& bank) {
    const NodeId mem(global_id::kMemoryAccess), bnd(global_id::kBoundary),
        thr(global_id::kThroughput), reuse(global_id::kDataReuse), par(global_id::kParallelMapping);

    bank.add_local(make_local(
        "l_g_mem_aligned_vec4_main_tail", mem,
        {"float4 vectorized main loop with alignment guards and scalar fallback",
         {"memory-bound", "contiguous fp32 data"},
         {"strided-access", "non-contiguous views"},
         "Reinterpret contiguous buffers as float4 when both pointers are 16-byte aligned and the "
         "element count is a multiple of 4; keep a scalar kernel for every other case.",
         {"alignment check covers input and output", "n % 4 guard before reinterpretation",
          "scalar fallback reachable and tested"},
         {"misaligned pointer from slicing", "tail elements dropped"}}));
    bank.add_local(make_local(
        "l_g_mem_ldg_readonly_texture_path", mem,
        {"read-only-load refinement using __ldg and fast intrinsics",
         {"memory-bound", "read-only inputs"},
         {"inputs written in the same kernel"},
         "Route read-only input loads through __ldg (const __restrict__) and use fast math "
         "intrinsics where the tolerance allows.",
         {"inputs are never written by the kernel", "intrinsic error within tolerance"},
         {"aliasing between input and output", "precision loss from fast intrinsics"}}));
    bank.add_local(make_local(
        "l_g_mem_stride_aware_restructure", mem,
        {"stride-aware access restructuring",
         {"strided-access"},
         {"already coalesced access"},
         "Reorder the index mapping so consecutive threads touch consecutive addresses; "
         "transpose through registers or shared memory when the layout forces a stride.",
         {"every output element written exactly once", "index math matches the layout"},
         {"wrong index permutation", "extra shared-memory traffic"}}));
    bank.add_local(make_local(
        "l_g_mem_register_micro_tiling", mem,
        {"register-level micro-tiling",
         {"repeated-index-computation", "small reuse windows"},
         {"high register pressure"},
         "Load a small tile per thread into registers and compute several outputs from it.",
         {"tile edges handled", "register count checked"},
         {"spills", "occupancy loss"}}));

    bank.add_local(make_local(
        "l_g_bound_fast_path_predicate", bnd,
        {"fast-path predicate for full tiles",
         {"boundary-risk", "branch-heavy-loop"},
         {"tiny inputs"},
         "Hoist the bounds check to a single predicate selecting an unguarded path for full "
         "tiles and the guarded path otherwise.",
         {"predicate exact for all shapes", "guarded path still covers partial tiles"},
         {"predicate off by one"}}));
    bank.add_local(make_local(
        "l_g_bound_tail_isolation", bnd,
        {"tail isolation",
         {"boundary-risk"},
         {"sizes always divisible by the vector width"},
         "Split the iteration space into a divisible main body and a separately handled tail.",
         {"tail covers remainder elements", "main body has no per-element guard"},
         {"double-processed or skipped tail elements"}}));
    bank.add_local(make_local(
        "l_g_bound_shape_specialized_dispatch", bnd,
        {"shape-specific dispatch",
         {"boundary-risk", "few dominant shapes"},
         {"highly dynamic shapes"},
         "Dispatch to kernels specialized for the observed shapes with a generic fallback.",
         {"generic fallback always reachable", "specializations match their guards"},
         {"code-size growth", "wrong specialization selected"}}));

    bank.add_local(make_local(
        "l_g_tput_small_factor_unroll", thr,
        {"small-factor unrolling",
         {"short inner loops", "repeated-index-computation"},
         {"high register pressure"},
         "Unroll short fixed-trip loops by 2-4 with #pragma unroll and a remainder loop.",
         {"remainder iterations handled", "results bit-compatible within tolerance"},
         {"remainder loop missing", "register spills"}}));
    bank.add_local(make_local(
        "l_g_tput_register_accumulation", thr,
        {"register accumulation",
         {"reductions", "repeated global writes"},
         {"atomics required for correctness"},
         "Accumulate partial results in registers and write once per thread.",
         {"single final write per output", "initial value correct"},
         {"lost partial sums", "reassociation drift"}}));
    bank.add_local(make_local(
        "l_g_tput_invariant_hoisting", thr,
        {"loop-invariant hoisting",
         {"repeated-index-computation"},
         {"already minimal index math"},
         "Move loop-invariant address and scalar computations out of the hot loop.",
         {"hoisted values truly invariant"},
         {"hoisting a value that changes per iteration"}}));

    bank.add_local(make_local(
        "l_g_reuse_shared_memory_tiling", reuse,
        {"shared-memory tiling",
         {"matmul-like reuse", "stencils"},
         {"pure elementwise operators"},
         "Stage tiles of the inputs in shared memory and compute from the staged copy.",
         {"__syncthreads placement", "tile edges guarded", "bank conflicts checked"},
         {"missing barrier", "uninitialized tile padding"}}));
    bank.add_local(make_local(
        "l_g_reuse_staged_reuse", reuse,
        {"staged reuse through registers or shared memory",
         {"repeated loads of the same element"},
         {"single-use data"},
         "Load each reused value once per block and reuse it across the consumers in the block.",
         {"each value loaded once", "consumers read the staged copy"},
         {"stale staged values"}}));
    bank.add_local(make_local(
        "l_g_reuse_light_epilogue_fusion", reuse,
        {"lightweight epilogue fusion for eliminating intermediate memory traffic",
         {"memory-bound", "producer-consumer elementwise chains"},
         {"operators needing a full intermediate materialization"},
         "Fuse the elementwise chain into one kernel computing the final value at writeback so no "
         "intermediate tensor is materialized; keep the framework expression as fallback.",
         {"no intermediate tensor allocated", "fallback for unsupported dtypes/devices"},
         {"numerical mismatch against the unfused reference"}}));

    bank.add_local(make_local(
        "l_g_par_output_aligned_blocks", par,
        {"output-aligned block shapes",
         {"2D/3D outputs", "strided-access"},
         {"1D contiguous elementwise kernels"},
         "Choose block dimensions that follow the output layout so each warp writes a contiguous "
         "row segment.",
         {"grid covers the whole output", "block size a multiple of 32"},
         {"uncovered output regions"}}));
    bank.add_local(make_local(
        "l_g_par_warp_lane_remap", par,
        {"warp-lane remapping",
         {"per-row reductions", "divergent lanes"},
         {"rows shorter than a warp"},
         "Assign one warp per row or segment and remap lanes for contiguous access and shuffle "
         "reductions.",
         {"lane mask correct", "partial warps handled"},
         {"shuffle with inactive lanes"}}));
    bank.add_local(make_local(
        "l_g_par_thread_coarsening", par,
        {"thread coarsening with grid-stride loops",
         {"memory-bound", "very large launches"},
         {"low parallelism"},
         "Process several elements per thread through a grid-stride loop and cap the grid size.",
         {"grid-stride loop covers all elements", "grid capped at the device limit"},
         {"grid too small for latency hiding"}}));
}

struct SeededEdge {
    std::string_view src;
    std::string_view dst;
    EdgePrior prior;
};

void seed_edge_priors(MemoryBank& bank) {
    const SeededEdge seeded[] = {
        {global_id::kDataReuse, global_id::kMemoryAccess,
         {"Once intermediates are fused away, the remaining cost is the raw load/store stream; "
          "vectorizing it is the natural next lever.",
          {"memory-bound", "fused elementwise kernel"},
          {"vector path changes the fused kernel's alignment assumptions"}}},
        {global_id::kMemoryAccess, global_id::kMemoryAccess,
         {"Successive memory refinements (vector width, then read-only path) compound on the "
          "same kernel.",
          {"memory-bound"},
          {"diminishing returns after the first vectorization"}}},
        {global_id::kMemoryAccess, global_id::kBoundary,
         {"Vectorized main loops leave tails and alignment cases that are cheaper to isolate than "
          "to guard inline.",
          {"boundary-risk"},
          {"tail handling regressions"}}},
        {global_id::kMemoryAccess, global_id::kThroughput,
         {"After memory access is improved the bottleneck often moves to instruction issue.",
          {"repeated-index-computation", "branch-heavy-loop"},
          {"register pressure from unrolling"}}},
        {global_id::kParallelMapping, global_id::kMemoryAccess,
         {"A layout-aligned mapping enables coalesced and vectorized accesses.",
          {"strided-access"},
          {"mapping and vector width disagree"}}},
        {global_id::kBoundary, global_id::kThroughput,
         {"A branch-free hot path is easier to unroll and hoist.",
          {"branch-heavy-loop"},
          {"unrolled tail mishandled"}}},
    };
    for (const auto& s : seeded) {
        bank.edge_mut(std::string(s.src), std::string(s.dst)).prior = s.prior;
    }
}

void default_edge_priors(MemoryBank& bank) {
    for (const auto& [key, edge] : bank.edges()) {
        const auto& src = bank.global(key.first).label;
        const auto& dst = bank.global(key.second).label;
        EdgePrior prior;
        prior.rationale = key.first == key.second
                              ? "Continue refining under " + src + "."
                              : "Move from " + src + " to " + dst + ".";
        bank.edge_mut(key.first, key.second).prior = std::move(prior);
    }
}

}  // namespace

MemoryBank init_default_bank(bool seed_priors) {
    MemoryBank bank;
    add_globals(bank);
    add_locals(bank);
    default_edge_priors(bank);
    if (seed_priors) seed_edge_priors(bank);
    bank.meta().created_from = seed_priors ? "default-seeded" : "default";
    bank.meta().writable = false;
    return bank;
}

}  // namespace htg
