"""Train a small MLP embedding with several losses and compare retrieval."""

from atcl import SynthConfig, TrainConfig, evaluate, fit, forward, generate

# a harder set than the default so the losses separate a little
data = generate(SynthConfig(K=10, per_class=100, D=32, spread=0.9, seed=0))
test = data.subset("test")


def show(name, report, loss=None):
    tail = "" if loss is None else f"  final loss {loss:.4f}"
    print(f"{name:>15}: MAP {report.map:.4f}  AUC {report.auc:.4f}  "
          f"F {report.f_measure_micro:.4f}  NDCG {report.ndcg_micro:.4f}{tail}")


show("raw features", evaluate(test.X, test.labels))
# center loss pulls features together with no push apart, so keep its weight small
for kind, lam in (("softmax", 1.0), ("center+softmax", 0.01), ("atcl", 1.0), ("atcl+softmax", 1.0)):
    res = fit(data, TrainConfig(loss_kind=kind, lam=lam))
    show(kind, evaluate(forward(res.model, test.X), test.labels), res.history[-1]["loss"])
