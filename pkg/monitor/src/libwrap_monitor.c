/* Full measurement runtime: exact call counts plus monotonic-clock
 * timing, aggregated into per-thread call trees that are merged into
 * one JSON profile at process exit.
 *
 * Hot path (enter/exit) touches only thread-local state: a shadow
 * stack and the thread's own call tree.  The global lock is taken only
 * when registering regions, when a thread shows up for the first time,
 * and when flushing.  The shadow stack doubles as a balance assertion:
 * an exit that does not match the innermost enter aborts immediately,
 * naming both regions, because a broken wrapper must never produce a
 * silently wrong profile.
 *
 * Beyond the depth cap, frames fold: each region still gets its exact
 * call count in a node directly under the capped path, but no time is
 * added there since the capped ancestor's inclusive time already
 * covers it.  This bounds memory under unbounded recursion while
 * keeping per-region counts exact.
 *
 * The exit flush is registered lazily on first use, so a dormant copy
 * of the runtime (e.g. in a passthrough wrapper library) never touches
 * the profile file.
 */

#include <pthread.h>
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>
#include <unistd.h>

#include "libwrap_monitor.h"

#define LW_DEFAULT_MAX_DEPTH 64

struct lw_region {
    char *name;
    char *file;
    int line;
};

struct lw_node {
    int region;
    unsigned long long count;
    uint64_t incl_ns;
    struct lw_node *parent;
    struct lw_node *children;
    struct lw_node *next_sibling;
};

struct lw_frame {
    struct lw_node *node;
    uint64_t enter_ns;
    int folded;
};

struct lw_thread {
    struct lw_node root;
    struct lw_frame *stack;
    int depth;
    int capacity;
    struct lw_thread *next;
};

static pthread_mutex_t lw_lock = PTHREAD_MUTEX_INITIALIZER;
static struct lw_region *lw_regions;
static int lw_region_count;
static int lw_region_capacity;
static struct lw_thread *lw_threads;
static int lw_active;
static int lw_max_depth = LW_DEFAULT_MAX_DEPTH;

static __thread struct lw_thread *lw_self;

static void lw_write_profile(void);

static void *lw_xalloc(size_t n) {
    void *p = calloc(1, n);
    if (p == 0) {
        fprintf(stderr, "libwrap: monitor allocation failed\n");
        abort();
    }
    return p;
}

static char *lw_strdup(const char *s) {
    size_t n = strlen(s) + 1;
    char *copy = lw_xalloc(n);
    memcpy(copy, s, n);
    return copy;
}

static uint64_t lw_now_ns(void) {
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000ull + (uint64_t)ts.tv_nsec;
}

/* Called with the lock held. */
static void lw_activate(void) {
    const char *env;
    if (lw_active)
        return;
    lw_active = 1;
    env = getenv("LIBWRAP_MAX_DEPTH");
    if (env != 0 && env[0] != 0) {
        long depth = strtol(env, 0, 10);
        if (depth >= 1 && depth <= 1 << 20)
            lw_max_depth = (int)depth;
    }
    if (getenv("LIBWRAP_VERBOSE") != 0)
        fprintf(stderr, "libwrap: monitor active (pid %ld)\n", (long)getpid());
    atexit(lw_write_profile);
}

int libwrap_region_register(const char *name, const char *file, int line) {
    int id;
    pthread_mutex_lock(&lw_lock);
    lw_activate();
    for (id = 0; id < lw_region_count; ++id) {
        if (lw_regions[id].line == line
            && strcmp(lw_regions[id].name, name) == 0
            && strcmp(lw_regions[id].file, file) == 0) {
            pthread_mutex_unlock(&lw_lock);
            return id;
        }
    }
    if (lw_region_count == lw_region_capacity) {
        int cap = lw_region_capacity ? lw_region_capacity * 2 : 64;
        struct lw_region *grown = lw_xalloc((size_t)cap * sizeof *grown);
        memcpy(grown, lw_regions, (size_t)lw_region_count * sizeof *grown);
        free(lw_regions);
        lw_regions = grown;
        lw_region_capacity = cap;
    }
    id = lw_region_count++;
    lw_regions[id].name = lw_strdup(name);
    lw_regions[id].file = lw_strdup(file);
    lw_regions[id].line = line;
    pthread_mutex_unlock(&lw_lock);
    return id;
}

static struct lw_thread *lw_thread_self(void) {
    struct lw_thread *t = lw_self;
    if (t == 0) {
        t = lw_xalloc(sizeof *t);
        t->root.region = -1;
        t->capacity = 256;
        t->stack = lw_xalloc((size_t)t->capacity * sizeof *t->stack);
        pthread_mutex_lock(&lw_lock);
        lw_activate();
        t->next = lw_threads;
        lw_threads = t;
        pthread_mutex_unlock(&lw_lock);
        lw_self = t;
    }
    return t;
}

static struct lw_node *lw_child(struct lw_node *parent, int region) {
    struct lw_node *child;
    for (child = parent->children; child != 0; child = child->next_sibling)
        if (child->region == region)
            return child;
    child = lw_xalloc(sizeof *child);
    child->region = region;
    child->parent = parent;
    child->next_sibling = parent->children;
    parent->children = child;
    return child;
}

static const char *lw_region_name(int id) {
    if (id >= 0 && id < lw_region_count)
        return lw_regions[id].name;
    return "<root>";
}

void libwrap_enter(int id) {
    struct lw_thread *t = lw_thread_self();
    struct lw_frame *frame;
    struct lw_node *parent;
    int folded;
    if (t->depth == t->capacity) {
        int cap = t->capacity * 2;
        struct lw_frame *grown = lw_xalloc((size_t)cap * sizeof *grown);
        memcpy(grown, t->stack, (size_t)t->depth * sizeof *grown);
        free(t->stack);
        t->stack = grown;
        t->capacity = cap;
    }
    folded = t->depth >= lw_max_depth;
    if (t->depth == 0)
        parent = &t->root;
    else if (!folded)
        parent = t->stack[t->depth - 1].node;
    else
        parent = t->stack[lw_max_depth - 1].node;
    frame = &t->stack[t->depth++];
    frame->node = lw_child(parent, id);
    frame->node->count += 1;
    frame->folded = folded;
    frame->enter_ns = lw_now_ns();
}

void libwrap_exit(int id) {
    struct lw_thread *t = lw_thread_self();
    struct lw_frame *frame;
    if (t->depth == 0) {
        fprintf(stderr,
                "libwrap: unbalanced exit: '%s' (region %d) exited with an "
                "empty call stack\n", lw_region_name(id), id);
        abort();
    }
    frame = &t->stack[t->depth - 1];
    if (frame->node->region != id) {
        fprintf(stderr,
                "libwrap: unbalanced exit: expected '%s' (region %d), "
                "got '%s' (region %d)\n",
                lw_region_name(frame->node->region), frame->node->region,
                lw_region_name(id), id);
        abort();
    }
    if (!frame->folded)
        frame->node->incl_ns += lw_now_ns() - frame->enter_ns;
    t->depth -= 1;
}

/* -- flush: merge the per-thread trees and write one JSON profile -- */

static void lw_merge_tree(struct lw_node *into, const struct lw_node *from) {
    const struct lw_node *child;
    into->count += from->count;
    into->incl_ns += from->incl_ns;
    for (child = from->children; child != 0; child = child->next_sibling)
        lw_merge_tree(lw_child(into, child->region), child);
}

static void lw_free_tree(struct lw_node *node) {
    struct lw_node *child = node->children;
    while (child != 0) {
        struct lw_node *next = child->next_sibling;
        lw_free_tree(child);
        free(child);
        child = next;
    }
    node->children = 0;
}

static void lw_json_string(FILE *fh, const char *s) {
    fputc('"', fh);
    for (; *s; ++s) {
        unsigned char c = (unsigned char)*s;
        if (c == '"' || c == '\\')
            fprintf(fh, "\\%c", c);
        else if (c < 0x20)
            fprintf(fh, "\\u%04x", c);
        else
            fputc(c, fh);
    }
    fputc('"', fh);
}

static void lw_write_node(FILE *fh, const struct lw_node *node) {
    const struct lw_node *child;
    uint64_t child_sum = 0;
    for (child = node->children; child != 0; child = child->next_sibling)
        child_sum += child->incl_ns;
    fprintf(fh, "{\"region\":%d,\"count\":%llu,\"incl_ns\":%llu,"
            "\"excl_ns\":%llu,\"children\":[",
            node->region, node->count,
            (unsigned long long)node->incl_ns,
            (unsigned long long)(node->incl_ns > child_sum
                                 ? node->incl_ns - child_sum : 0));
    for (child = node->children; child != 0; child = child->next_sibling) {
        if (child != node->children)
            fputc(',', fh);
        lw_write_node(fh, child);
    }
    fputs("]}", fh);
}

static void lw_profile_path(char *buf, size_t size) {
    const char *env = getenv("LIBWRAP_PROFILE_OUT");
    if (env != 0 && env[0] != 0) {
        const char *pct = strstr(env, "%p");
        if (pct != 0) {
            snprintf(buf, size, "%.*s%ld%s", (int)(pct - env), env,
                     (long)getpid(), pct + 2);
        } else {
            snprintf(buf, size, "%s", env);
        }
    } else {
        snprintf(buf, size, "libwrap_profile.%ld.json", (long)getpid());
    }
}

static void lw_write_profile(void) {
    char path[4096];
    struct lw_node merged;
    struct lw_thread *t;
    FILE *fh;
    int id;
    pthread_mutex_lock(&lw_lock);
    lw_profile_path(path, sizeof path);
    fh = fopen(path, "w");
    if (fh == 0) {
        /* Measurement must never change the application's exit status. */
        fprintf(stderr, "libwrap: cannot write profile to %s\n", path);
        pthread_mutex_unlock(&lw_lock);
        return;
    }
    memset(&merged, 0, sizeof merged);
    merged.region = -1;
    for (t = lw_threads; t != 0; t = t->next)
        lw_merge_tree(&merged, &t->root);
    merged.count = 0;
    merged.incl_ns = 0;
    fputs("{\"regions\":[", fh);
    for (id = 0; id < lw_region_count; ++id) {
        if (id)
            fputc(',', fh);
        fprintf(fh, "{\"id\":%d,\"name\":", id);
        lw_json_string(fh, lw_regions[id].name);
        fputs(",\"file\":", fh);
        lw_json_string(fh, lw_regions[id].file);
        fprintf(fh, ",\"line\":%d}", lw_regions[id].line);
    }
    fputs("],\"calltree\":", fh);
    lw_write_node(fh, &merged);
    fputs("}\n", fh);
    fclose(fh);
    lw_free_tree(&merged);
    if (getenv("LIBWRAP_VERBOSE") != 0)
        fprintf(stderr, "libwrap: profile written to %s\n", path);
    pthread_mutex_unlock(&lw_lock);
}

void libwrap_flush(void) {
    pthread_mutex_lock(&lw_lock);
    lw_activate();
    pthread_mutex_unlock(&lw_lock);
    lw_write_profile();
}
