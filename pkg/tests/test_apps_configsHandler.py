import os
import shutil
import tempfile
import unittest

from src.PyFirstHit.apps.configsHandler import ConfigsHandler, DeepMerge, ParseScalar
from src.PyFirstHit.utils.exceptions import ConfigurationError, ParseError


class TestConfigsHandler(unittest.TestCase):

    def setUp(self):
        """在每个测试方法之前执行，用于初始化共享的测试数据"""
        self.test_dir = 'data/config'
        self.tmp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp_dir)

    def write(self, name, text):
        path = os.path.join(self.tmp_dir, name)
        with open(path, "w", encoding="utf-8") as fp:
            fp.write(text)
        return path

    def test_defaults_only(self):
        handler = ConfigsHandler()
        self.assertEqual(handler.simulation.dt, "const:0.001")
        self.assertEqual(handler.training.learning_rate.sphere, 0.05)
        self.assertEqual(handler.hit_eps.halfspace, 0.001)

    def test_load_yaml_config_with_import(self):
        """测试 YAML 配置文件加载，import 的 TOML 文件随后合并"""
        yaml_handler = ConfigsHandler(file_path=os.path.join(self.test_dir, 'train_sphere.yaml'))

        self.assertEqual(yaml_handler.scheme, "sphere:d=2,eps=0.01")
        self.assertEqual(yaml_handler.training.epochs, 150)
        self.assertTrue(yaml_handler.training.use_pool)
        # 未覆盖的键保留默认值
        self.assertEqual(yaml_handler.training.batch_size, 32)
        self.assertEqual(yaml_handler.training.learning_rate.sphere, 0.05)
        self.assertEqual(yaml_handler.simulation.seed, 3)
        self.assertEqual(yaml_handler.simulation.dt, "const:0.0001")
        self.assertEqual(yaml_handler.simulation.drift_clamp, 0.5)

    def test_load_json_config(self):
        """测试 JSON 配置文件加载"""
        json_handler = ConfigsHandler(file_path=os.path.join(self.test_dir, 'halfspace.json'))

        self.assertEqual(json_handler.scheme, "halfspace:d=1,ymax=1,sx=1,sy=1")
        self.assertEqual(json_handler.evaluation.time_bins, 50)
        self.assertEqual(json_handler.evaluation.circle_bins, 36)

    def test_load_toml_config(self):
        """测试 TOML 配置文件加载"""
        toml_handler = ConfigsHandler(file_path=os.path.join(self.test_dir, 'sphere_simulation.toml'))

        self.assertEqual(toml_handler.simulation.max_steps, 1000000)
        self.assertEqual(toml_handler.simulation.workers, 4)
        self.assertFalse(hasattr(toml_handler.configs, "scheme"))

    def test_load_key_value_config(self):
        """测试 key=value 配置文件加载"""
        cfg_handler = ConfigsHandler(file_path=os.path.join(self.test_dir, 'train_categorical.cfg'))

        self.assertEqual(cfg_handler.scheme, "categorical:d=3,m=1,eps=0.01")
        self.assertEqual(cfg_handler.simulation.seed, 11)
        self.assertEqual(cfg_handler.training.epochs, 300)
        self.assertEqual(cfg_handler.training.output_bound, 5.0)
        self.assertEqual(cfg_handler.as_dict()["training"]["hidden"], 100)

    def test_later_files_override(self):
        handler = ConfigsHandler(file_path=os.path.join(self.test_dir, 'train_boolean.cfg'))
        handler.add_config_file(self.write("more.cfg", "training.epochs = 5\n"))
        self.assertEqual(handler.training.epochs, 5)
        self.assertEqual(handler.simulation.seed, 7)

    def test_errors(self):
        with self.assertRaises(ConfigurationError):
            ConfigsHandler(file_path=os.path.join(self.tmp_dir, "missing.yaml"))
        with self.assertRaises(ConfigurationError):
            ConfigsHandler(file_path=self.write("conf.xml", "<a/>"))
        with self.assertRaises(ConfigurationError):
            ConfigsHandler(file_path=self.write("broken.json", "{"))
        with self.assertRaises(ConfigurationError):
            ConfigsHandler(file_path=self.write("list.yaml", "- 1\n- 2\n"))
        with self.assertRaises(ParseError) as ctx:
            ConfigsHandler(file_path=self.write("bad.cfg", "# comment\nscheme = sphere:d=2\nepochs 5\n"))
        self.assertEqual(ctx.exception.line, 3)
        with self.assertRaises(AttributeError):
            _ = ConfigsHandler().no_such_key

    def test_missing_import_is_skipped(self):
        path = self.write("main.yaml", "scheme: boolean:d=2\nimport:\n  - nowhere.toml\n")
        self.assertEqual(ConfigsHandler(file_path=path).scheme, "boolean:d=2")


class TestConfigHelpers(unittest.TestCase):

    def test_parse_scalar(self):
        self.assertIs(ParseScalar("yes"), True)
        self.assertIs(ParseScalar("Off"), False)
        self.assertEqual(ParseScalar("12"), 12)
        self.assertEqual(ParseScalar("1e-3"), 0.001)
        self.assertEqual(ParseScalar("const:0.001"), "const:0.001")

    def test_deep_merge(self):
        base = {"a": {"b": 1, "c": 2}, "d": 3}
        merged = DeepMerge(base, {"a": {"b": 5}, "e": 6})
        self.assertEqual(merged, {"a": {"b": 5, "c": 2}, "d": 3, "e": 6})
        self.assertEqual(base["a"]["b"], 1)

    def test_as_dict_is_a_copy(self):
        handler = ConfigsHandler()
        snapshot = handler.as_dict()
        snapshot["simulation"]["seed"] = 99
        self.assertEqual(handler.as_dict()["simulation"]["seed"], handler.simulation.seed)
        self.assertNotEqual(handler.simulation.seed, 99)


if __name__ == '__main__':
    # 运行所有测试
    unittest.main()
