/* Copyright 2026 The cdg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the cdg library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every function returning cdg_status leaves a message retrievable with
 * cdg_last_error() on failure; the message is thread-local and valid until
 * the next failing call on the same thread. Strings returned through char**
 * out-parameters are owned by the caller and released with cdg_string_free().
 */

#ifndef CDG_CDG_H_
#define CDG_CDG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CDG_API __declspec(dllexport)
#else
#define CDG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cdg_status {
  CDG_OK = 0,
  CDG_ERR_USAGE = 1,    /* bad argument or configuration */
  CDG_ERR_DATA = 2,     /* unreadable or invalid input data or model file */
  CDG_ERR_RUNTIME = 3,  /* anything else */
  CDG_ERR_PROVIDER = 4  /* paraphrase endpoint failure */
} cdg_status;

typedef struct cdg_config cdg_config;
typedef struct cdg_dataset cdg_dataset;
typedef struct cdg_model cdg_model;

CDG_API const char* cdg_version(void);
CDG_API const char* cdg_last_error(void);
/* Symbolic name of the last error, e.g. "MalformedLine". */
CDG_API const char* cdg_last_error_code(void);
CDG_API void cdg_string_free(char* s);

/* Configuration. Keys are "section.name"; see cdg_config_keys(). */
CDG_API cdg_status cdg_config_new(cdg_config** out);
CDG_API cdg_status cdg_config_load(const char* path, cdg_config** out);
CDG_API cdg_status cdg_config_set(cdg_config* cfg, const char* key, const char* value);
CDG_API cdg_status cdg_config_get(const cdg_config* cfg, const char* key, char** out);
/* Newline-separated list of every key. */
CDG_API cdg_status cdg_config_keys(char** out);
CDG_API cdg_status cdg_config_json(const cdg_config* cfg, char** out);
CDG_API void cdg_config_free(cdg_config* cfg);

/* Datasets. `format` is "auto", "tweet" or "absa" (NULL means auto); `lang`
 * applies to tweet files. */
CDG_API cdg_status cdg_dataset_load(const char* path, const char* format, const char* lang,
                                    cdg_dataset** out);
CDG_API cdg_status cdg_dataset_save(const cdg_dataset* d, const char* path);
CDG_API size_t cdg_dataset_size(const cdg_dataset* d);
/* "tweet" or "absa". */
CDG_API const char* cdg_dataset_kind(const cdg_dataset* d);
/* Hex SHA-256 of the source file, or of the serialized form for datasets
 * built in memory. */
CDG_API cdg_status cdg_dataset_digest(const cdg_dataset* d, char** out);
/* Item and label counts as JSON. */
CDG_API cdg_status cdg_dataset_summary(const cdg_dataset* d, char** out);
CDG_API void cdg_dataset_free(cdg_dataset* d);

/* Models. */
CDG_API cdg_status cdg_model_load(const char* path, cdg_model** out);
CDG_API cdg_status cdg_model_save(const cdg_model* m, const char* path);
/* "classifier" or "absa". */
CDG_API const char* cdg_model_kind(const cdg_model* m);
CDG_API int cdg_model_is_ct(const cdg_model* m);
CDG_API void cdg_model_free(cdg_model* m);

/* Reports produced below are JSON documents carrying the tool version, the
 * effective configuration and the digests of their inputs. Optional
 * out-parameters may be NULL. */

/* Trains a classifier (tweet data) or an aspect model (absa data; `ct`
 * selects causal training). `val` may be NULL. */
CDG_API cdg_status cdg_train(const cdg_config* cfg, const cdg_dataset* train,
                             const cdg_dataset* val, int ct, cdg_model** model_out,
                             char** report_json, char** trace_csv);

/* `mode` is "standard", "tie" or NULL for the model's default. The
 * predictions are JSONL rows {id, gold, pred}. */
CDG_API cdg_status cdg_eval(const cdg_config* cfg, const cdg_model* model,
                            const cdg_dataset* data, const char* mode, char** report_json,
                            char** predictions_jsonl);

/* Builds the RevTgt / RevNon / AddDiff suites. ARS is computed when `model`
 * or `predictions_path` (JSONL rows with "id" and "pred") is given;
 * otherwise *ars_json is set to NULL. `distractors_path` may be NULL. */
CDG_API cdg_status cdg_perturb(const cdg_config* cfg, const cdg_dataset* data,
                               const char* lexicon_path, const char* distractors_path,
                               const cdg_model* model, const char* predictions_path,
                               const char* mode, char** revtgt_jsonl, char** revnon_jsonl,
                               char** adddiff_jsonl, char** report_json, char** ars_json);

/* Re-spans every aspect by exact match or best n-gram similarity. */
CDG_API cdg_status cdg_align(const cdg_config* cfg, const cdg_dataset* data, size_t n_max,
                             cdg_dataset** aligned_out, char** rows_csv, char** report_json);

/* Generates the paraphrased domain with the provider in cda.provider. A
 * remote run reads its key from CDG_API_KEY. `resume_ledger` may be NULL. */
CDG_API cdg_status cdg_paraphrase(const cdg_config* cfg, const cdg_dataset* data,
                                  const char* resume_ledger, cdg_dataset** d2_out,
                                  char** ledger_jsonl, char** report_json);

/* Full cross-domain experiment. `d2` may be NULL to generate it. */
CDG_API cdg_status cdg_cda_run(const cdg_config* cfg, const cdg_dataset* d1,
                               const cdg_dataset* d2, char** report_json, char** report_csv,
                               char** trace_csv);

/* Cross-language experiment over absa datasets grouped by their "lang". */
CDG_API cdg_status cdg_ood_run(const cdg_config* cfg, const cdg_dataset* const* datasets,
                               size_t n_datasets, const char* train_lang, int ct,
                               char** report_json, char** trace_csv);

/* Renders a report produced above as CSV; `plot_csv` receives its training
 * traces as model,step,train_loss,val_accuracy rows. */
CDG_API cdg_status cdg_report_render(const char* report_json, char** csv, char** plot_csv);

/* Steps-to-threshold over the traces of several train reports, keyed by
 * `names`. */
CDG_API cdg_status cdg_report_convergence(const char* const* report_jsons,
                                          const char* const* names, size_t n,
                                          double threshold, char** report_json,
                                          char** trace_csv);

/* Synthetic benchmarks. */
CDG_API cdg_status cdg_synth_absa(size_t n_sentences, double rho, double rho_test,
                                  uint64_t seed, cdg_dataset** train_out,
                                  cdg_dataset** test_out, char** lexicon_json,
                                  char** distractors_json);
CDG_API cdg_status cdg_synth_tweets(size_t n, double shift, uint64_t seed,
                                    cdg_dataset** out, char** synonyms_json);

#ifdef __cplusplus
}
#endif

#endif /* CDG_CDG_H_ */
