"""Pure-Python reference kernel for the block-by-block queue simulation.

Semantics (shared with the compiled twin, which must produce bit-identical
results on the same inputs):

  per block: one or more packets arrive at the start boundary, each
  admitted unless the buffer already holds more than K unfinished packets;
  the block's channel capacity then serves the FIFO backlog; the
  post-service count of packets with unserved data is the queue-length
  sample for that block.

Per-packet delay is recorded three ways at departure: whole blocks
(completion block minus arrival boundary), the residual-as-fresh-block
convention (whole blocks plus remainder/available-capacity), and the true
physical fraction (whole blocks plus used/capacity).
"""

KERNEL_NAME = "python"

# state_i slots
HEAD, COUNT, BLOCK, CPREV, TADM, TDEP, TDROP, TOFF = range(8)
# acc_i slots
BLOCKS, NC0, NBUSY, NRUNS, OFFERED, DROPS, ADMITTED, DEPARTED, DSAMP = range(9)
# acc_d slots
SUMQ, DRESID, DPHYS, DWHOLE = range(4)

N_STATE_I = 8
N_ACC_I = 9
N_ACC_D = 4


def run_chunk(caps, arrivals, lp, bufK, accumulate,
              state_i, state_d, arr_time, first_touch,
              acc_i, acc_d, count_hist, service_hist, trace=None):
    """Advance the queue through len(caps) blocks, mutating state in place.

    bufK < 0 means an infinite buffer. `trace`, when given, receives one
    (block, backlog_nats, queue_packets, admitted, dropped, departures)
    tuple per block; the compiled kernel does not support tracing.
    """
    cap_ring = len(arr_time)
    head = int(state_i[HEAD])
    count = int(state_i[COUNT])
    block = int(state_i[BLOCK])
    c_prev = int(state_i[CPREV])
    head_rem = float(state_d[0])
    hist_max = len(count_hist) - 1
    st_max = len(service_hist) - 1
    n = len(caps)

    for i in range(n):
        b = float(block)
        na = int(arrivals[i])
        adm_now = 0
        drop_now = 0
        for _ in range(na):
            state_i[TOFF] += 1
            if accumulate:
                acc_i[OFFERED] += 1
            if bufK < 0 or count <= bufK:
                idx = (head + count) % cap_ring
                arr_time[idx] = b
                first_touch[idx] = -1
                count += 1
                if count == 1:
                    head_rem = lp
                state_i[TADM] += 1
                adm_now += 1
                if accumulate:
                    acc_i[ADMITTED] += 1
            else:
                state_i[TDROP] += 1
                drop_now += 1
                if accumulate:
                    acc_i[DROPS] += 1
        s = caps[i]
        cap_s = s
        dep_now = 0
        while s > 0.0 and count > 0:
            if first_touch[head] < 0:
                first_touch[head] = block
            if s >= head_rem:
                portion = head_rem
                avail = s
                s = s - portion
                state_i[TDEP] += 1
                dep_now += 1
                if accumulate:
                    arr = arr_time[head]
                    dwhole = b - arr
                    acc_d[DWHOLE] += dwhole
                    acc_d[DRESID] += dwhole + portion / avail
                    acc_d[DPHYS] += dwhole + (cap_s - s) / cap_s
                    acc_i[DSAMP] += 1
                    acc_i[DEPARTED] += 1
                    t_int = block - first_touch[head]
                    if t_int > st_max:
                        t_int = st_max
                    service_hist[t_int] += 1
                head = (head + 1) % cap_ring
                count -= 1
                head_rem = lp if count > 0 else 0.0
            else:
                head_rem = head_rem - s
                s = 0.0
        c = count
        if accumulate:
            acc_i[BLOCKS] += 1
            acc_d[SUMQ] += c
            count_hist[c if c <= hist_max else hist_max] += 1
            if c == 0:
                acc_i[NC0] += 1
            else:
                acc_i[NBUSY] += 1
                if c_prev == 0:
                    acc_i[NRUNS] += 1
        if trace is not None:
            backlog = head_rem + (count - 1) * lp if count > 0 else 0.0
            trace.append((block, backlog, c, adm_now, drop_now, dep_now))
        c_prev = c
        block += 1

    state_i[HEAD] = head
    state_i[COUNT] = count
    state_i[BLOCK] = block
    state_i[CPREV] = c_prev
    state_d[0] = head_rem
