/* cc examples/solve.c -Iinclude ../../target/release/libtransnn_ffi.a -lpthread -ldl -lm */
#include <stdio.h>
#include <stdlib.h>

#include "transnn.h"

int main(int argc, char **argv) {
    const char *path = argc > 1 ? argv[1] : "../core/scenarios/five_node.json";
    TnnScenario *sc = NULL;
    if (tnn_scenario_load(path, &sc) != TNN_STATUS_OK) {
        fprintf(stderr, "load: %s\n", tnn_last_error());
        return 1;
    }
    size_t n = tnn_scenario_node_count(sc), T = tnn_scenario_horizon(sc);

    TnnMdpSolution *mdp = NULL;
    if (tnn_solve_mdp(sc, 0, &mdp) == TNN_STATUS_OK) {
        printf("mdp expected cost %.4f\n", tnn_mdp_expected_cost(mdp));
        tnn_mdp_free(mdp);
    } else {
        printf("mdp: %s\n", tnn_last_error());
    }

    TnnControlSolution *ctl = NULL;
    if (tnn_solve_transnn(sc, 0, &ctl) != TNN_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", tnn_last_error());
        tnn_scenario_free(sc);
        return 1;
    }
    TnnControlSummary sum;
    tnn_control_summary(ctl, &sum);
    printf("transnn J2 %.4f, status %d after %zu iterations\n", sum.j2, (int)sum.status,
           sum.iterations);
    unsigned char *u = malloc(n * T);
    tnn_control_schedule(ctl, u, n * T);
    for (size_t k = 0; k < T; k++) {
        for (size_t i = 0; i < n; i++)
            putchar(u[k * n + i] ? '1' : '.');
        putchar('\n');
    }
    free(u);
    tnn_control_free(ctl);
    tnn_scenario_free(sc);
    return 0;
}
