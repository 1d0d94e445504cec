import pytest


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def dynamics_csv(tmp_path):
    def make(name="dynamics.csv", n=12, scale=1.0):
        rows = [(i + 1, 0.01 * i * scale, 1.0 + 0.1 * i * scale) for i in range(n)]
        return write_csv(tmp_path / name, ("iteration", "mean_avg", "var_avg"), rows)

    return make


@pytest.fixture
def gradflow_csv(tmp_path):
    def make(name="gradflow.csv", layers=4, steps=6, hot=None):
        rows = []
        for i in range(1, layers + 1):
            for t in range(1, steps + 1):
                value = 0.0
                if hot is None:
                    value = i * 0.1 + t * 0.01
                elif (i, t) == hot:
                    value = 1.0
                rows.append((i, t, value))
        return write_csv(tmp_path / name, ("layer", "timestep", "grad_l2"), rows)

    return make


@pytest.fixture
def train_csv(tmp_path):
    def make(name="train.csv", epochs=5, dnc_at=None):
        rows = []
        for e in range(1, epochs + 1):
            if dnc_at == e:
                rows.append((e, e * 10, "DNC", "", 0.0002))
                break
            val = 3.0 / e if e % 2 == 0 else ""
            rows.append((e, e * 10, 4.0 / e, val, 0.0002))
        return write_csv(
            tmp_path / name, ("epoch", "step", "train_bpc", "val_bpc", "lr"), rows
        )

    return make
