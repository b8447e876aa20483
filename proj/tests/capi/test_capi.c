#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "chatmine/chatmine.h"

static int failures = 0;

#define CHECK(cond)                                                              \
    do {                                                                         \
        if (!(cond)) {                                                           \
            fprintf(stderr, "%s:%d: CHECK(%s) failed; last error: %s\n", __FILE__, \
                    __LINE__, #cond, cm_last_error());                           \
            ++failures;                                                          \
        }                                                                        \
    } while (0)

static char* slurp(const char* path) {
    FILE* f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    fseek(f, 0, SEEK_SET);
    char* buf = malloc((size_t)n + 1);
    size_t got = fread(buf, 1, (size_t)n, f);
    buf[got] = '\0';
    fclose(f);
    return buf;
}

static void join(char* out, size_t cap, const char* dir, const char* name) { snprintf(out, cap, "%s/%s", dir, name); }

int main(int argc, char** argv) {
    if (argc < 3) {
        fprintf(stderr, "usage: test_capi <fixtures-dir> <scratch-dir>\n");
        return 2;
    }
    const char* fixtures = argv[1];
    const char* scratch = argv[2];
    char labeled[1024], chat[1024], issue[1024], solution[1024], pairs_a[1024], pairs_b[1024], dialogs[1024],
        cleaned[1024];
    join(labeled, sizeof labeled, fixtures, "overfit40.jsonl");
    join(chat, sizeof chat, fixtures, "chat_small.jsonl");
    join(issue, sizeof issue, scratch, "issue.ckpt");
    join(solution, sizeof solution, scratch, "solution.ckpt");
    join(pairs_a, sizeof pairs_a, scratch, "pairs_a.jsonl");
    join(pairs_b, sizeof pairs_b, scratch, "pairs_b.jsonl");
    join(dialogs, sizeof dialogs, scratch, "dialogs.jsonl");
    join(cleaned, sizeof cleaned, scratch, "clean.jsonl");

    CHECK(strlen(cm_version()) > 0);
    CHECK(strcmp(cm_status_string(CM_ERR_IO), "io") == 0);

    cm_config* cfg = NULL;
    CHECK(cm_config_create(NULL) == CM_ERR_ARGUMENT);
    CHECK(cm_config_create(&cfg) == CM_OK);
    CHECK(cm_config_set(cfg, "model.nope", "1") == CM_ERR_CONFIG);
    CHECK(strstr(cm_last_error(), "model.nope") != NULL);
    CHECK(cm_config_set(cfg, "encoder.dim", "64") == CM_OK);
    CHECK(cm_config_set(cfg, "model.conv_kernels", "16,8") == CM_OK);
    CHECK(cm_config_set(cfg, "model.attention_dim", "8") == CM_OK);
    CHECK(cm_config_set(cfg, "model.hidden", "8") == CM_OK);
    CHECK(cm_config_set(cfg, "model.max_epochs", "3") == CM_OK);
    char* value = NULL;
    CHECK(cm_config_get(cfg, "model.hidden", &value) == CM_OK && value && strcmp(value, "8") == 0);
    cm_free(value);
    CHECK(cm_config_get(cfg, "seed", &value) == CM_OK && value == NULL);

    size_t n = 0;
    CHECK(cm_preprocess_file(cfg, "/nonexistent/chat.jsonl", NULL, cleaned, NULL, &n) == CM_ERR_IO);
    CHECK(cm_preprocess_file(cfg, chat, NULL, cleaned, NULL, &n) == CM_OK && n > 0);
    CHECK(cm_disentangle_file(cfg, chat, NULL, dialogs, &n) == CM_OK && n > 0);

    char* report = NULL;
    CHECK(cm_train_file(cfg, labeled, "bogus", issue, NULL) == CM_ERR_ARGUMENT);
    CHECK(cm_train_file(cfg, labeled, "issue", issue, &report) == CM_OK && report && strstr(report, "epochs_run"));
    cm_free(report);
    CHECK(cm_train_file(cfg, labeled, "solution", solution, NULL) == CM_OK);

    cm_model* model = NULL;
    CHECK(cm_model_load(issue, &model) == CM_OK);
    char* info = NULL;
    CHECK(cm_model_info(model, &info) == CM_OK && info && strstr(info, "issue"));
    cm_free(info);
    cm_model_destroy(model);
    CHECK(cm_model_load(chat, &model) != CM_OK);

    size_t n_pairs = 0;
    CHECK(cm_extract_file(cfg, chat, NULL, issue, solution, pairs_a, 1, &n_pairs) == CM_OK);
    CHECK(cm_extract_file(cfg, chat, NULL, issue, solution, pairs_b, 2, NULL) == CM_OK);
    char* a = slurp(pairs_a);
    char* b = slurp(pairs_b);
    CHECK(a && b && strcmp(a, b) == 0);
    free(a);
    free(b);
    /* Swapped checkpoints are caught by the target check. */
    CHECK(cm_extract_file(cfg, chat, NULL, solution, issue, pairs_b, 1, NULL) == CM_ERR_CONFIG);

    CHECK(cm_eval_file(cfg, labeled, issue, solution, NULL, &report) == CM_OK && report &&
          strstr(report, "macro_average"));
    cm_free(report);

    CHECK(cm_config_set(cfg, "encoder.dim", "32") == CM_OK);
    CHECK(cm_extract_file(cfg, chat, NULL, issue, solution, pairs_b, 1, NULL) == CM_ERR_CONFIG);
    cm_config_destroy(cfg);

    const uint64_t seeds[] = {1};
    CHECK(cm_gradcheck(1e-4, seeds, 1, &report) == CM_OK && report && strstr(report, "\"passed\": true"));
    cm_free(report);

    printf("%d failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
