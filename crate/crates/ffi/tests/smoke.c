#include <stdio.h>
#include <string.h>
#include "omnivi.h"

int main(void) {
    OmniviGame *game = NULL;
    if (omnivi_game_builtin("two_state", &game) != OMNIVI_STATUS_OK) return 10;
    size_t d = 0, h = 0, s = 0, a = 0;
    omnivi_game_dims(game, &d, &h, &s, &a);
    if (d != 8 || h != 2 || s != 2 || a != 2) return 11;
    double v = 0.0;
    if (omnivi_game_nash_value(game, 0, &v) != OMNIVI_STATUS_OK) return 12;
    omnivi_game_free(game);

    OmniviRun *run = NULL;
    if (omnivi_run_config("mode = \"offline\"\nK = 3\n", &run) != OMNIVI_STATUS_OK) return 13;
    char *csv = NULL;
    if (omnivi_run_csv(run, &csv) != OMNIVI_STATUS_OK) return 14;
    int ok = strncmp(csv, "k,ucb,lcb,gap,cum_gap,exploit1,exploit2", 39) == 0;
    omnivi_string_free(csv);
    omnivi_run_free(run);
    if (!ok) return 15;

    if (omnivi_run_config("mode = \"offline\"\nK = 0\n", &run) != OMNIVI_STATUS_INPUT) return 16;
    if (strlen(omnivi_last_error()) == 0) return 17;
    printf("value %.6f\n", v);
    return 0;
}
